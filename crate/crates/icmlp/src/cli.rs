//! Command-line surface: evaluate saved models, build certified
//! approximations, train networks, compare against skip-free twins, and run
//! the self-check suites.
//!
//! Every subcommand is deterministic given its flags: randomness comes only
//! from `--seed`, grids are pure functions of the domain, and CSV/JSON
//! output uses shortest round-trip decimals, so repeated runs produce
//! byte-identical artifacts. Exit codes: `0` success, `1` a tolerance,
//! verification, or numeric failure, `2` usage or I/O errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::activation::Activation;
use crate::constructive::{approximate, ApproxRequest};
use crate::domain::{default_grid_density, BoxDomain};
use crate::error::{Error, Result};
use crate::modelio;
use crate::rng::SplitMix64;
use crate::train::{fit, random_net, random_net_zero_skips, Optimizer, TrainConfig};
use crate::verify;

/// Built-in 1D and 2D target functions for `approximate`, plus the
/// `table:PATH` form which interpolates a sampled CSV piecewise-linearly.
pub const BUILTIN_TARGETS: &[&str] = &["sin3x", "abs", "runge", "square", "sincosxy"];

#[derive(Parser)]
#[command(
    name = "icmlp",
    about = "Networks with direct input connections at every layer: \
             evaluation, certified approximation, training, and self-checks.",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a saved model on a grid or a point list, emitting CSV.
    Eval(EvalArgs),
    /// Build a network approximating a named target to a certified
    /// sup-norm tolerance, writing the model, certificate, and error table.
    Approximate(ApproximateArgs),
    /// Fit a randomly initialized network to a dataset CSV.
    Train(TrainArgs),
    /// Train a network and its skip-free twin from identical shared
    /// initialization, writing both loss columns side by side.
    Compare(CompareArgs),
    /// Run a seeded self-check suite and report its maximum deviation.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Model file to evaluate.
    #[arg(long)]
    model: PathBuf,
    /// Evaluation box, one `lo,hi` pair per axis separated by `;`.
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// Grid points per axis (with --domain). Default: a density suited to
    /// the dimension.
    #[arg(long)]
    grid: Option<usize>,
    /// CSV of explicit evaluation points (one row per point) instead of a
    /// grid.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Output CSV path. Prints to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ApproximateArgs {
    /// Target name (see `BUILTIN_TARGETS`) or `table:PATH` for a sampled
    /// 1D function interpolated piecewise-linearly.
    #[arg(long)]
    target: String,
    /// Approximation box, one `lo,hi` pair per axis separated by `;`.
    #[arg(long, allow_hyphen_values = true)]
    domain: String,
    /// Sup-norm tolerance to certify.
    #[arg(long)]
    tol: f64,
    /// Activation of the constructed network.
    #[arg(long, default_value = "tanh")]
    activation: String,
    /// Certification grid density per axis (the recheck grid is twice as
    /// dense). Default: chosen from the dimension.
    #[arg(long)]
    grid: Option<usize>,
    /// Where to write the model.
    #[arg(long, default_value = "model.json")]
    out: PathBuf,
    /// Where to write the certificate.
    #[arg(long, default_value = "certificate.json")]
    certificate_out: PathBuf,
    /// Where to write the per-grid-point error table.
    #[arg(long, default_value = "errors.csv")]
    errors_out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset CSV: input coordinates, then the target value, per row.
    #[arg(long)]
    data: PathBuf,
    /// Hidden widths, e.g. `8,8`. Empty (with --depth 0) means an affine
    /// model.
    #[arg(long)]
    widths: Option<String>,
    /// Number of hidden layers; must agree with --widths when both are
    /// given. Alone it means that many layers of width 8.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value = "tanh")]
    activation: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Heavy-ball momentum coefficient in [0, 1). Plain gradient steps when
    /// omitted.
    #[arg(long)]
    momentum: Option<f64>,
    /// Keep direct input connections beyond the first layer (and the
    /// output's direct term) fixed during training.
    #[arg(long)]
    freeze_input_skips: bool,
    /// Where to write the trained model.
    #[arg(long, default_value = "trained.json")]
    out: PathBuf,
    /// Where to write the per-step loss table.
    #[arg(long, default_value = "loss.csv")]
    loss_out: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Dataset CSV: input coordinates, then the target value, per row.
    #[arg(long)]
    data: PathBuf,
    /// Hidden widths, e.g. `8,8`.
    #[arg(long)]
    widths: Option<String>,
    /// Number of hidden layers; must agree with --widths when both are
    /// given.
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, default_value = "tanh")]
    activation: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Heavy-ball momentum coefficient in [0, 1).
    #[arg(long)]
    momentum: Option<f64>,
    /// Where to write the side-by-side loss table.
    #[arg(long, default_value = "compare.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite to run; one of the names listed by `verify::SUITES`.
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 12345)]
    seed: u64,
}

/// Entry point for the binary: parse `std::env::args_os` and run.
pub fn main() -> ExitCode {
    run_from(std::env::args_os())
}

/// Parse and run, returning the process exit code. Exists separately from
/// [`main`] so tests can drive the CLI in-process.
pub fn run_from<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2u8 } else { 0u8 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    // A malformed thread cap is a usage error for every subcommand, even the
    // ones that never parallelize — failing only sometimes would make the
    // environment part of the interface contract.
    threads_from_env()?;
    match cli.command {
        Command::Eval(args) => cmd_eval(args),
        Command::Approximate(args) => cmd_approximate(args),
        Command::Train(args) => cmd_train(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

/// Exit code for a failed run: usage and I/O problems are `2`, numeric and
/// verification failures are `1`.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::Table { .. }
        | Error::ModelField { .. }
        | Error::FormatVersion(_)
        | Error::UnserializableActivation(_)
        | Error::Structure(_)
        | Error::DimensionMismatch { .. }
        | Error::NonFiniteInput
        | Error::NonFiniteParam(_) => 2,
        _ => 1,
    }
}

/// Worker threads for grid measurements, from `ICMLP_THREADS` (default 1
/// so runs are bit-reproducible without configuration).
fn threads_from_env() -> Result<usize> {
    parse_threads(std::env::var("ICMLP_THREADS").ok().as_deref())
}

fn parse_threads(raw: Option<&str>) -> Result<usize> {
    match raw {
        None => Ok(1),
        Some(s) => match s.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(t),
            _ => Err(Error::InvalidArgument(format!(
                "ICMLP_THREADS must be a positive integer, got `{s}`"
            ))),
        },
    }
}

/// Parse a box spec: one `lo,hi` pair per axis, pairs separated by `;`.
fn parse_domain(spec: &str) -> Result<BoxDomain> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in spec.split(';') {
        let (a, b) = part.split_once(',').ok_or_else(|| {
            Error::InvalidArgument(format!(
                "domain axis `{part}` is not a `lo,hi` pair (example: \"-1,1;-1,1\")"
            ))
        })?;
        let parse = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("`{v}` is not a number")))
        };
        lo.push(parse(a)?);
        hi.push(parse(b)?);
    }
    BoxDomain::new(lo, hi)
}

fn parse_activation(name: &str) -> Result<Activation> {
    Activation::parse(name).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "unknown activation `{name}`; use relu, tanh, sigmoid, softplus, identity, \
             or affine:SLOPE,INTERCEPT"
        ))
    })
}

/// Resolve `--depth`/`--widths` into a width-per-layer list. `--widths`
/// alone fixes everything; `--depth` alone means width 8 per layer; both
/// together must agree; neither means one hidden layer of width 8.
fn resolve_widths(depth: Option<usize>, widths: Option<&str>) -> Result<Vec<usize>> {
    let parsed: Option<Vec<usize>> = match widths {
        None => None,
        Some(s) if s.trim().is_empty() => Some(Vec::new()),
        Some(s) => Some(
            s.split(',')
                .map(|w| {
                    w.trim().parse::<usize>().ok().filter(|w| *w >= 1).ok_or_else(|| {
                        Error::InvalidArgument(format!("`{w}` is not a positive layer width"))
                    })
                })
                .collect::<Result<Vec<usize>>>()?,
        ),
    };
    match (depth, parsed) {
        (Some(d), Some(w)) if w.len() != d => Err(Error::InvalidArgument(format!(
            "--depth {d} disagrees with --widths listing {} layers",
            w.len()
        ))),
        (_, Some(w)) => Ok(w),
        (Some(d), None) => Ok(vec![8; d]),
        (None, None) => Ok(vec![8]),
    }
}

/// A builtin target by name, or `table:PATH`, as (dimension, function).
type Target = Box<dyn Fn(&[f64]) -> f64 + Sync>;

fn resolve_target(name: &str) -> Result<(usize, Target)> {
    match name {
        "sin3x" => Ok((1, Box::new(|x: &[f64]| (3.0 * x[0]).sin()))),
        "abs" => Ok((1, Box::new(|x: &[f64]| x[0].abs()))),
        "runge" => Ok((1, Box::new(|x: &[f64]| 1.0 / (1.0 + 25.0 * x[0] * x[0])))),
        "square" => Ok((1, Box::new(|x: &[f64]| x[0] * x[0]))),
        "sincosxy" => Ok((2, Box::new(|x: &[f64]| x[0].sin() * x[1].cos()))),
        _ => {
            if let Some(path) = name.strip_prefix("table:") {
                let table = load_table(Path::new(path))?;
                return Ok((1, Box::new(move |x: &[f64]| table.interpolate(x[0]))));
            }
            Err(Error::InvalidArgument(format!(
                "unknown target `{name}`; builtins: {}; or table:PATH for sampled data",
                BUILTIN_TARGETS.join(", ")
            )))
        }
    }
}

/// A sampled 1D function: sorted (x, f(x)) pairs interpolated linearly,
/// clamped to the end values outside the sampled range.
struct SampledTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl SampledTable {
    fn interpolate(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let mut hi = self.xs.partition_point(|&v| v <= x);
        hi = hi.clamp(1, n - 1);
        let (x0, x1) = (self.xs[hi - 1], self.xs[hi]);
        let t = (x - x0) / (x1 - x0);
        self.ys[hi - 1] + t * (self.ys[hi] - self.ys[hi - 1])
    }
}

fn load_table(path: &Path) -> Result<SampledTable> {
    let rows = modelio::read_numeric_rows(path)?;
    if rows.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "table target `{}` needs at least two (x, f(x)) rows",
            path.display()
        )));
    }
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 2 {
            return Err(Error::Table {
                line: i + 1,
                msg: format!("table targets need exactly 2 columns, got {}", row.len()),
            });
        }
        pairs.push((row[0], row[1]));
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidArgument(format!(
            "table target `{}` has duplicate x values",
            path.display()
        )));
    }
    Ok(SampledTable {
        xs: pairs.iter().map(|p| p.0).collect(),
        ys: pairs.iter().map(|p| p.1).collect(),
    })
}

fn point_columns(dim: usize) -> Vec<String> {
    if dim == 1 {
        vec!["x".to_string()]
    } else {
        (0..dim).map(|i| format!("x{i}")).collect()
    }
}

fn write_or_print(path: Option<&Path>, csv: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, csv)?;
            Ok(())
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn cmd_eval(args: EvalArgs) -> Result<ExitCode> {
    let model = modelio::load(&args.model)?;
    let dim = model.input_dim();
    let points: Vec<Vec<f64>> = match (&args.points, &args.domain) {
        (Some(path), _) => {
            let rows = modelio::read_numeric_rows(path)?;
            for (i, row) in rows.iter().enumerate() {
                if row.len() != dim {
                    return Err(Error::Table {
                        line: i + 1,
                        msg: format!("point has {} coordinates, model takes {dim}", row.len()),
                    });
                }
            }
            rows
        }
        (None, Some(spec)) => {
            let domain = parse_domain(spec)?;
            if domain.dim() != dim {
                return Err(Error::InvalidArgument(format!(
                    "domain has {} axes but the model takes {dim} inputs",
                    domain.dim()
                )));
            }
            let per_axis = args.grid.unwrap_or_else(|| default_grid_density(dim));
            if per_axis == 0 {
                return Err(Error::InvalidArgument("--grid must be positive".into()));
            }
            domain.grid_len(per_axis)?; // fail early on absurd sizes
            domain.grid(per_axis).collect()
        }
        (None, None) => {
            return Err(Error::InvalidArgument(
                "eval needs either --points FILE or --domain SPEC".into(),
            ))
        }
    };
    let mut columns = point_columns(dim);
    columns.push("H".to_string());
    let column_refs: Vec<&str> = columns.iter().map(|c| c.as_str()).collect();
    let mut rows = Vec::with_capacity(points.len());
    for x in &points {
        let mut row = x.clone();
        row.push(model.eval(x)?);
        rows.push(row);
    }
    let csv = modelio::render_table(&column_refs, &rows)?;
    write_or_print(args.out.as_deref(), &csv)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_approximate(args: ApproximateArgs) -> Result<ExitCode> {
    let (dim, target) = resolve_target(&args.target)?;
    let domain = parse_domain(&args.domain)?;
    if domain.dim() != dim {
        return Err(Error::InvalidArgument(format!(
            "target `{}` takes {dim} input(s) but the domain has {} axes",
            args.target,
            domain.dim()
        )));
    }
    let activation = parse_activation(&args.activation)?;
    let threads = threads_from_env()?;
    let mut request = ApproxRequest::new(&*target, domain.clone(), args.tol, activation);
    request.threads = threads;
    if let Some(grid) = args.grid {
        if grid < 2 {
            return Err(Error::InvalidArgument("--grid must be at least 2".into()));
        }
        request.budget.max_probe_density = grid.saturating_mul(2);
    }
    let (net, certificate) = match approximate(&request) {
        Ok(pair) => pair,
        Err(Error::BudgetExhausted { achieved, tol, certificate }) => {
            // Record how far the construction got before reporting failure.
            modelio::save_certificate(&certificate, &args.certificate_out)?;
            return Err(Error::BudgetExhausted { achieved, tol, certificate });
        }
        Err(e) => return Err(e),
    };
    modelio::save_vector(&net, &args.out)?;
    modelio::save_certificate(&certificate, &args.certificate_out)?;

    let per_axis = certificate.grid_per_axis;
    let mut columns = point_columns(dim);
    columns.extend(["target".to_string(), "net".to_string(), "abs_error".to_string()]);
    let column_refs: Vec<&str> = columns.iter().map(|c| c.as_str()).collect();
    let mut rows = Vec::with_capacity(domain.grid_len(per_axis)?);
    for x in domain.grid(per_axis) {
        let want = target(&x);
        let got = net.eval(&x)?;
        let mut row = x;
        row.extend([want, got, (want - got).abs()]);
        rows.push(row);
    }
    modelio::export_table(&column_refs, &rows, &args.errors_out)?;

    println!(
        "certified sup error {:.6e} (recheck {:.6e}) <= tolerance {:.6e}; \
         model: {}, certificate: {}, errors: {}",
        certificate.measured_sup_error,
        certificate.recheck_sup_error,
        certificate.tolerance,
        args.out.display(),
        args.certificate_out.display(),
        args.errors_out.display(),
    );
    Ok(ExitCode::SUCCESS)
}

fn train_config(
    learning_rate: f64,
    steps: usize,
    batch_size: usize,
    seed: u64,
    momentum: Option<f64>,
    freeze_input_skips: bool,
) -> TrainConfig {
    let mut config = TrainConfig::new(learning_rate, steps, batch_size, seed);
    if let Some(beta) = momentum {
        config.optimizer = Optimizer::Momentum { beta };
    }
    config.freeze_input_skips = freeze_input_skips;
    config
}

fn cmd_train(args: TrainArgs) -> Result<ExitCode> {
    let data = modelio::read_dataset(&args.data)?;
    let dim = data[0].0.len();
    let widths = resolve_widths(args.depth, args.widths.as_deref())?;
    let activation = parse_activation(&args.activation)?;
    let mut rng = SplitMix64::new(args.seed);
    let net = random_net(&mut rng, dim, &widths, activation);
    let config = train_config(
        args.learning_rate,
        args.steps,
        args.batch_size,
        args.seed,
        args.momentum,
        args.freeze_input_skips,
    );
    let (trained, losses) = fit(&net, &data, &config)?;
    modelio::save_vector(&trained, &args.out)?;
    let rows: Vec<Vec<f64>> =
        losses.iter().enumerate().map(|(i, l)| vec![i as f64, *l]).collect();
    modelio::export_table(&["step", "loss"], &rows, &args.loss_out)?;
    println!(
        "trained {} steps; first loss {}, last loss {}; model: {}, losses: {}",
        losses.len(),
        modelio::format_f64(losses[0]),
        modelio::format_f64(*losses.last().expect("steps >= 1")),
        args.out.display(),
        args.loss_out.display(),
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(args: CompareArgs) -> Result<ExitCode> {
    let data = modelio::read_dataset(&args.data)?;
    let dim = data[0].0.len();
    let widths = resolve_widths(args.depth, args.widths.as_deref())?;
    let activation = parse_activation(&args.activation)?;

    // Both nets draw from the same seeded stream, so every shared parameter
    // starts identical; the twin's direct input connections beyond the first
    // layer are zeroed and frozen, making it an ordinary MLP.
    let mut rng = SplitMix64::new(args.seed);
    let full = random_net(&mut rng, dim, &widths, activation);
    let mut rng_twin = SplitMix64::new(args.seed);
    let twin = random_net_zero_skips(&mut rng_twin, dim, &widths, activation);

    let config =
        train_config(args.learning_rate, args.steps, args.batch_size, args.seed, args.momentum, false);
    let mut twin_config = config.clone();
    twin_config.freeze_input_skips = true;

    let (_, losses_full) = fit(&full, &data, &config)?;
    let (_, losses_twin) = fit(&twin, &data, &twin_config)?;
    debug_assert_eq!(losses_full.len(), losses_twin.len());
    let rows: Vec<Vec<f64>> = losses_full
        .iter()
        .zip(&losses_twin)
        .enumerate()
        .map(|(i, (a, b))| vec![i as f64, *a, *b])
        .collect();
    modelio::export_table(&["step", "icmlp", "standard"], &rows, &args.out)?;
    println!(
        "final losses: icmlp {}, standard {}; table: {}",
        modelio::format_f64(*losses_full.last().expect("steps >= 1")),
        modelio::format_f64(*losses_twin.last().expect("steps >= 1")),
        args.out.display(),
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let report = verify::run_suite(&args.suite, args.seed)?;
    println!("{report}");
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
