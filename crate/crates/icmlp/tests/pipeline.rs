//! Cross-module flows: constructed networks through serialization, training
//! on top of constructed and embedded networks, and the structural fingerprints
//! that distinguish this architecture from an ordinary MLP.

mod common;

use icmlp::algebra::{embed_standard, strip_to_standard, StandardLayer, StandardMlp};
use icmlp::constructive::{approximate, ApproxRequest};
use icmlp::modelio;
use icmlp::net::VectorNet;
use icmlp::rng::SplitMix64;
use icmlp::train::{fit, TrainConfig};
use icmlp::{Activation, BoxDomain};

fn sin3x_net(activation: Activation, tol: f64) -> (VectorNet, icmlp::constructive::Certificate) {
    let domain = BoxDomain::interval(-1.0, 1.0).unwrap();
    let target = |x: &[f64]| (3.0 * x[0]).sin();
    let req = ApproxRequest::new(&target, domain, tol, activation);
    approximate(&req).unwrap()
}

#[test]
fn constructed_nets_survive_disk_round_trips_bit_for_bit() {
    let dir = common::scratch_dir("pipeline-roundtrip");
    let (net, cert) = sin3x_net(Activation::Relu, 0.05);

    let model_path = dir.path().join("model.json");
    modelio::save_vector(&net, &model_path).unwrap();
    let loaded = modelio::load(&model_path).unwrap();
    assert_eq!(loaded.as_vector(), &net, "loaded net differs structurally");

    let mut rng = SplitMix64::new(99);
    for _ in 0..200 {
        let x = [rng.uniform_in(-1.0, 1.0)];
        let a = net.eval(&x).unwrap();
        let b = loaded.eval(&x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits(), "eval changed after reload at {x:?}");
    }

    // The certificate serializes and rereads as the same JSON.
    let cert_path = dir.path().join("cert.json");
    modelio::save_certificate(&cert, &cert_path).unwrap();
    let text = std::fs::read_to_string(&cert_path).unwrap();
    assert!(text.contains("\"measured_sup_error\""));
    assert!(cert.measured_sup_error <= 0.05);
}

#[test]
fn constructed_nets_use_the_direct_input_paths() {
    // The construction leans on input connections (exact affine stages and
    // skip-borne linear terms), so stripping to an ordinary MLP must fail.
    let (net, _) = sin3x_net(Activation::Relu, 0.05);
    assert!(net.depth() >= 1);
    assert!(
        strip_to_standard(&net).is_err(),
        "a constructed approximator unexpectedly had all skips zero"
    );
}

#[test]
fn training_refines_a_constructed_approximator() {
    // Build a coarse approximator, then descend on sampled data. Constructed
    // networks carry large internal weights (difference quotients), so the
    // rate must be small; at 1e-4 the full-batch loss drops by a wide margin
    // and the trace stays finite throughout.
    let (net, cert) = sin3x_net(Activation::Relu, 0.2);
    let mut rng = SplitMix64::new(7);
    let data: Vec<(Vec<f64>, f64)> = (0..64)
        .map(|_| {
            let x = rng.uniform_in(-1.0, 1.0);
            (vec![x], (3.0 * x).sin())
        })
        .collect();
    let full_batch = data.len();
    let config = TrainConfig::new(1e-4, 400, full_batch, 11);
    let (tuned, losses) = fit(&net, &data, &config).unwrap();
    assert_eq!(losses.len(), 400);
    assert!(losses.iter().all(|l| l.is_finite()));
    // With full batches the reported per-step loss is the dataset MSE.
    let first = losses[0];
    let last = *losses.last().unwrap();
    assert!(
        last < 0.5 * first,
        "descent barely moved: started {first:e}, ended {last:e} (certificate {:e})",
        cert.measured_sup_error
    );
    assert_eq!(tuned.widths(), net.widths(), "training changed the architecture");
}

#[test]
fn frozen_skips_keep_an_embedded_net_strippable_through_training() {
    // Embed an ordinary MLP, train with the skip parameters frozen, and the
    // result must still strip back to an ordinary MLP with the same shape.
    let mut rng = SplitMix64::new(21);
    let plain = common::random_plain_mlp(&mut rng, 1, &[6, 6]);
    let mlp = StandardMlp::new(
        1,
        plain
            .layers
            .iter()
            .map(|(w, b)| StandardLayer { weights: w.clone(), bias: b.clone() })
            .collect(),
        plain.out_weights.clone(),
        plain.out_bias,
        Activation::Tanh,
    )
    .unwrap();
    let net = embed_standard(&mlp).unwrap();

    let data: Vec<(Vec<f64>, f64)> = (0..48)
        .map(|_| {
            let x = rng.uniform_in(-1.0, 1.0);
            (vec![x], 0.5 * x * x - 0.25 * x)
        })
        .collect();
    let mut config = TrainConfig::new(0.05, 300, data.len(), 5);
    config.freeze_input_skips = true;
    let (trained, losses) = fit(&net, &data, &config).unwrap();
    assert!(losses.last().unwrap() < &losses[0], "training made no progress");

    let stripped = strip_to_standard(&trained).expect("frozen skips must stay zero");
    assert_eq!(stripped.widths(), mlp.widths());

    // Without freezing, the same run bends the skip paths away from zero.
    let mut free = TrainConfig::new(0.05, 300, data.len(), 5);
    free.freeze_input_skips = false;
    let (loose, _) = fit(&net, &data, &free).unwrap();
    assert!(strip_to_standard(&loose).is_err(), "free training left every skip at zero");
}

#[test]
fn certificates_report_the_grid_they_measured() {
    let (_, cert) = sin3x_net(Activation::Relu, 0.05);
    assert_eq!(cert.recheck_per_axis, 2 * cert.grid_per_axis);
    assert!(cert.tolerance == 0.05);
    assert!(cert.measured_sup_error <= cert.tolerance);
    assert!(cert.recheck_sup_error <= cert.tolerance * 1.05);
    let ledger = &cert.ledger;
    for (name, v) in [
        ("quadrature", ledger.quadrature_mass_deviation),
        ("square", ledger.square_stage),
        ("composition", ledger.composition),
        ("truncation", ledger.truncation),
    ] {
        assert!(v >= 0.0 && v.is_finite(), "{name} entry is {v}");
    }
}
