//! End-to-end runs of the compiled binary: every subcommand, the documented
//! exit-code split (0 success, 1 tolerance/verification failure, 2 usage/IO),
//! and byte determinism of seeded runs.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use icmlp::constructive::Certificate;
use icmlp::modelio;
use icmlp::net::VectorNet;

fn run(args: &[&str]) -> Output {
    Command::new(common::cli_bin())
        .args(args)
        .env_remove("ICMLP_THREADS")
        .output()
        .expect("spawn CLI")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_line_dataset(path: &Path, lo: f64, hi: f64, rows: usize) {
    let mut text = String::from("x,y\n");
    for i in 0..rows {
        let x = lo + (hi - lo) * (i as f64) / (rows as f64 - 1.0);
        let y = 2.0 * x + 1.0;
        text.push_str(&format!("{x},{y}\n"));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn approximate_runge_meets_the_documented_tolerance() {
    let dir = common::scratch_dir("cli-runge");
    let model = dir.path().join("m.json");
    let cert = dir.path().join("c.json");
    let errors = dir.path().join("e.csv");
    let out = run(&[
        "approximate",
        "--target",
        "runge",
        "--domain",
        "-1,1",
        "--tol",
        "0.02",
        "--activation",
        "relu",
        "--out",
        model.to_str().unwrap(),
        "--certificate-out",
        cert.to_str().unwrap(),
        "--errors-out",
        errors.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    let parsed: Certificate =
        serde_json::from_slice(&std::fs::read(&cert).unwrap()).unwrap();
    assert!(parsed.measured_sup_error <= 0.02, "measured {:e}", parsed.measured_sup_error);
    assert!(parsed.recheck_sup_error <= 0.021, "recheck {:e}", parsed.recheck_sup_error);
    assert_eq!(parsed.grid_per_axis, 2000);
    assert_eq!(parsed.recheck_per_axis, 4000);

    let loaded = modelio::load(&model).unwrap();
    assert!(loaded.as_vector().depth() >= 1);

    let error_lines = std::fs::read_to_string(&errors).unwrap().lines().count();
    assert_eq!(error_lines, 2001, "header plus one row per grid point");
}

#[test]
fn affine_activations_fail_fast_citing_nonlinearity() {
    for activation in ["identity", "affine:2,1"] {
        for tol in ["0.5", "0.01"] {
            let start = std::time::Instant::now();
            let out = run(&[
                "approximate",
                "--target",
                "square",
                "--domain",
                "-1,1",
                "--tol",
                tol,
                "--activation",
                activation,
            ]);
            assert_eq!(out.status.code(), Some(1), "activation {activation}, tol {tol}");
            assert!(
                stderr_of(&out).contains("nonlinear"),
                "stderr must cite the nonlinearity requirement: {}",
                stderr_of(&out)
            );
            assert!(start.elapsed().as_secs() < 5, "the gate must trip before any real work");
        }
    }
}

#[test]
fn eval_prints_exact_affine_values_on_a_grid() {
    let dir = common::scratch_dir("cli-eval");
    let model = dir.path().join("affine.json");
    modelio::save_vector(&VectorNet::affine(vec![2.0], 1.0).unwrap(), &model).unwrap();

    let out = run(&[
        "eval",
        "--model",
        model.to_str().unwrap(),
        "--domain",
        "0,1",
        "--grid",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert_eq!(stdout_of(&out), "x,H\n0,1\n0.5,2\n1,3\n");
}

#[test]
fn eval_takes_explicit_points_and_rejects_mismatched_ones() {
    let dir = common::scratch_dir("cli-points");
    let model = dir.path().join("affine.json");
    modelio::save_vector(&VectorNet::affine(vec![2.0], 1.0).unwrap(), &model).unwrap();

    let points = dir.path().join("points.csv");
    std::fs::write(&points, "-0.5\n0\n0.25\n").unwrap();
    let out = run(&["eval", "--model", model.to_str().unwrap(), "--points", points.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_of(&out), "x,H\n-0.5,0\n0,1\n0.25,1.5\n");

    // Two coordinates per point against a one-input model: usage error
    // naming the offending line.
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "0.1,0.2\n0.3,0.4\n").unwrap();
    let out = run(&["eval", "--model", model.to_str().unwrap(), "--points", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_of(&out);
    assert!(err.contains("line 1") && err.contains("coordinates"), "stderr: {err}");
}

#[test]
fn train_is_byte_deterministic_and_writes_a_loadable_model() {
    let dir = common::scratch_dir("cli-train");
    let data = dir.path().join("line.csv");
    write_line_dataset(&data, -1.0, 1.0, 32);

    let mut artifacts = Vec::new();
    for tag in ["a", "b"] {
        let model = dir.path().join(format!("model-{tag}.json"));
        let loss = dir.path().join(format!("loss-{tag}.csv"));
        let out = run(&[
            "train",
            "--data",
            data.to_str().unwrap(),
            "--widths",
            "4",
            "--seed",
            "7",
            "--steps",
            "500",
            "--learning-rate",
            "0.05",
            "--batch-size",
            "8",
            "--out",
            model.to_str().unwrap(),
            "--loss-out",
            loss.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
        artifacts.push((std::fs::read(&model).unwrap(), std::fs::read(&loss).unwrap()));
    }
    assert_eq!(artifacts[0].0, artifacts[1].0, "models differ between identical runs");
    assert_eq!(artifacts[0].1, artifacts[1].1, "loss traces differ between identical runs");

    let loss_lines = String::from_utf8(artifacts[0].1.clone()).unwrap().lines().count();
    assert_eq!(loss_lines, 501, "header plus one row per step");
    let model = modelio::load(&dir.path().join("model-a.json")).unwrap();
    assert_eq!(model.input_dim(), 1);
}

#[test]
fn compare_reaches_the_least_squares_floor_on_a_line() {
    let dir = common::scratch_dir("cli-compare");
    let data = dir.path().join("line.csv");
    // Narrow input range: both families fit y = 2x + 1 essentially exactly.
    write_line_dataset(&data, -0.25, 0.25, 32);

    let table = dir.path().join("compare.csv");
    let out = run(&[
        "compare",
        "--data",
        data.to_str().unwrap(),
        "--widths",
        "8",
        "--learning-rate",
        "0.08",
        "--steps",
        "100000",
        "--momentum",
        "0.97",
        "--batch-size",
        "32",
        "--out",
        table.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));

    let text = std::fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,icmlp,standard"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 100000, "one row per step for both columns");
    let last: Vec<&str> = rows.last().unwrap().split(',').collect();
    let icmlp_mse: f64 = last[1].parse().unwrap();
    let standard_mse: f64 = last[2].parse().unwrap();
    assert!(icmlp_mse <= 1e-6, "input-connected family ended at {icmlp_mse:e}");
    assert!(standard_mse <= 1e-6, "standard family ended at {standard_mse:e}");
}

#[test]
fn malformed_dataset_rows_name_their_line() {
    let dir = common::scratch_dir("cli-badrow");
    let data = dir.path().join("broken.csv");
    std::fs::write(&data, "x,y\n0,1\n0.5,2\n0.75,oops\n1,3\n").unwrap();
    let out = run(&["train", "--data", data.to_str().unwrap(), "--widths", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("line 4"), "stderr: {}", stderr_of(&out));
}

#[test]
fn table_targets_approximate_from_sampled_data() {
    let dir = common::scratch_dir("cli-table");
    let samples = dir.path().join("samples.csv");
    let mut text = String::from("x,fx\n");
    for i in 0..201 {
        let x = -1.0 + 2.0 * (i as f64) / 200.0;
        text.push_str(&format!("{x},{}\n", x * x));
    }
    std::fs::write(&samples, text).unwrap();

    let model = dir.path().join("m.json");
    let target = format!("table:{}", samples.to_str().unwrap());
    let out = run(&[
        "approximate",
        "--target",
        &target,
        "--domain",
        "-1,1",
        "--tol",
        "0.05",
        "--activation",
        "relu",
        "--out",
        model.to_str().unwrap(),
        "--certificate-out",
        dir.path().join("c.json").to_str().unwrap(),
        "--errors-out",
        dir.path().join("e.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let loaded = modelio::load(&model).unwrap();
    let mid = loaded.eval(&[0.5]).unwrap();
    assert!((mid - 0.25).abs() <= 0.06, "model({{0.5}}) = {mid}");
}

#[test]
fn verify_reports_pass_and_unknown_suites_list_the_options() {
    let out = run(&["verify", "--suite", "pad-depth"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("pass") && text.contains("max deviation"), "stdout: {text}");

    let out = run(&["verify", "--suite", "no-such-suite"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("affine-collapse"), "stderr: {}", stderr_of(&out));
}

#[test]
fn usage_and_io_errors_exit_with_code_two() {
    // No arguments at all.
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));

    // Required flag missing.
    let out = run(&["eval"]);
    assert_eq!(out.status.code(), Some(2));

    // Nonexistent model path.
    let out = run(&["eval", "--model", "/nonexistent/m.json", "--domain", "0,1"]);
    assert_eq!(out.status.code(), Some(2));

    // Inverted domain bounds.
    let out = run(&[
        "approximate",
        "--target",
        "sin3x",
        "--domain",
        "1,-1",
        "--tol",
        "0.05",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // Unparseable thread cap.
    let dir = common::scratch_dir("cli-threads");
    let model = dir.path().join("affine.json");
    modelio::save_vector(&VectorNet::affine(vec![2.0], 1.0).unwrap(), &model).unwrap();
    let out = Command::new(common::cli_bin())
        .args(["eval", "--model", model.to_str().unwrap(), "--domain", "0,1", "--grid", "3"])
        .env("ICMLP_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));

    // Help is not an error.
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}
