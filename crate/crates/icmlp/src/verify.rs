//! Seeded self-check suites: randomized structural identities (padding,
//! combination, reparameterization, composition), the affine-activation
//! collapse, and finite-difference gradient checks. Each suite runs a fixed
//! number of trials from a caller-supplied seed and reports the failure
//! count together with the largest deviation it saw, so a run is fully
//! reproducible and a pass leaves a quantitative margin on record.

use std::fmt;

use crate::activation::Activation;
use crate::algebra::{compose_shallow, linear_combine, pad_depth, reparam_affine};
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::net::{ScalarNet, VectorNet};
use crate::rng::SplitMix64;
use crate::train::{backward, random_net};

/// The suites [`run_suite`] understands, in the order they are listed by
/// usage errors and by callers that run everything.
pub const SUITES: &[&str] =
    &["affine-collapse", "pad-depth", "combine", "reparam", "compose", "gradient-check"];

/// Outcome of one suite: how many trials ran, how many exceeded the
/// tolerance, and the largest deviation observed anywhere.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: String,
    pub trials: usize,
    pub failures: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} ({} trials, {} failures, max deviation {:.3e}, tolerance {:.1e})",
            self.suite,
            if self.passed() { "pass" } else { "FAIL" },
            self.trials,
            self.failures,
            self.max_deviation,
            self.tolerance,
        )
    }
}

/// Run one suite by name. Unknown names are a usage error that lists the
/// available suites.
pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    match name {
        "affine-collapse" => Ok(affine_collapse_suite(seed)),
        "pad-depth" => Ok(pad_depth_suite(seed)),
        "combine" => Ok(combine_suite(seed)),
        "reparam" => Ok(reparam_suite(seed)),
        "compose" => Ok(compose_suite(seed)),
        "gradient-check" => Ok(gradient_suite(seed)),
        other => Err(Error::InvalidArgument(format!(
            "unknown verification suite `{other}`; available suites: {}",
            SUITES.join(", ")
        ))),
    }
}

fn random_widths(rng: &mut SplitMix64, depth: usize, max_width: usize) -> Vec<usize> {
    (0..depth).map(|_| 1 + (rng.next_u64() as usize) % max_width).collect()
}

fn random_points(rng: &mut SplitMix64, dim: usize, count: usize, half_side: f64) -> Vec<Vec<f64>> {
    let domain = BoxDomain::symmetric(half_side, dim).expect("fixed box is valid");
    (0..count).map(|_| domain.sample(rng)).collect()
}

/// With an affine activation every network collapses to a single affine
/// map. Fit that map by interpolation at `n + 1` points (exact for an
/// affine function) and measure the worst residual on a grid of roughly a
/// thousand points.
fn affine_collapse_suite(seed: u64) -> SuiteReport {
    let tolerance = 1e-9;
    let mut rng = SplitMix64::new(seed);
    let activation = Activation::Affine { slope: 2.0, intercept: 1.0 };
    let mut failures = 0;
    let mut max_deviation = 0.0f64;
    let trials = 50;
    for trial in 0..trials {
        let depth = trial % 5;
        let n = if trial % 2 == 0 { 1 } else { 3 };
        let widths = random_widths(&mut rng, depth, 8);
        let net = random_net(&mut rng, n, &widths, activation);
        let domain = BoxDomain::symmetric(1.0, n).expect("fixed box is valid");
        let residual = affine_fit_residual(&net, &domain).expect("affine nets evaluate");
        max_deviation = max_deviation.max(residual);
        if residual > tolerance {
            failures += 1;
        }
    }
    SuiteReport {
        suite: "affine-collapse".into(),
        trials,
        failures,
        max_deviation,
        tolerance,
    }
}

/// Interpolate an affine map through the domain's center and one offset
/// point per axis, then return the largest `|H(x) − (⟨c,x⟩ + d)|` over a
/// grid of about a thousand points.
pub(crate) fn affine_fit_residual(net: &VectorNet, domain: &BoxDomain) -> Result<f64> {
    let n = domain.dim();
    let x0 = domain.center();
    let h0 = net.eval(&x0)?;
    let mut c = vec![0.0; n];
    for (i, coeff) in c.iter_mut().enumerate() {
        let (a, b) = domain.side(i);
        let t = 0.25 * (b - a);
        let mut x = x0.clone();
        x[i] += t;
        *coeff = (net.eval(&x)? - h0) / t;
    }
    let d = h0 - c.iter().zip(&x0).map(|(ci, xi)| ci * xi).sum::<f64>();
    let per_axis = match n {
        1 => 1000,
        2 => 32,
        3 => 10,
        _ => 6,
    };
    let mut worst = 0.0f64;
    for x in domain.grid(per_axis) {
        let fitted = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum::<f64>() + d;
        worst = worst.max((net.eval(&x)? - fitted).abs());
    }
    Ok(worst)
}

/// Padding a network with identity-extension layers must not change its
/// values anywhere.
fn pad_depth_suite(seed: u64) -> SuiteReport {
    let tolerance = 1e-11;
    let mut rng = SplitMix64::new(seed);
    let mut failures = 0;
    let mut max_deviation = 0.0f64;
    let trials = 100;
    for trial in 0..trials {
        let n = 1 + trial % 3;
        let depth = trial % 4;
        let widths = random_widths(&mut rng, depth, 6);
        let net = random_net(&mut rng, n, &widths, Activation::Tanh);
        let extra = 1 + (rng.next_u64() as usize) % 3;
        let padded = pad_depth(&net, net.depth() + extra).expect("padding is well-formed");
        let mut trial_dev = 0.0f64;
        for x in random_points(&mut rng, n, 20, 1.5) {
            let a = net.eval(&x).expect("finite");
            let b = padded.eval(&x).expect("finite");
            trial_dev = trial_dev.max((a - b).abs());
        }
        max_deviation = max_deviation.max(trial_dev);
        if trial_dev > tolerance {
            failures += 1;
        }
    }
    SuiteReport { suite: "pad-depth".into(), trials, failures, max_deviation, tolerance }
}

/// A weighted combination of networks must evaluate to the same weighted
/// combination of their values.
fn combine_suite(seed: u64) -> SuiteReport {
    let tolerance = 1e-11;
    let mut rng = SplitMix64::new(seed);
    let mut failures = 0;
    let mut max_deviation = 0.0f64;
    let trials = 100;
    for trial in 0..trials {
        let n = 1 + trial % 2;
        let count = 2 + trial % 2;
        let parts: Vec<VectorNet> = (0..count)
            .map(|_| {
                let depth = (rng.next_u64() as usize) % 3;
                let widths = random_widths(&mut rng, depth, 5);
                random_net(&mut rng, n, &widths, Activation::Tanh)
            })
            .collect();
        let coeffs: Vec<f64> = (0..count).map(|_| rng.uniform_symmetric(2.0)).collect();
        let refs: Vec<&VectorNet> = parts.iter().collect();
        let combined = linear_combine(&refs, &coeffs).expect("combination is well-formed");
        let mut trial_dev = 0.0f64;
        for x in random_points(&mut rng, n, 20, 1.0) {
            let want: f64 = parts
                .iter()
                .zip(&coeffs)
                .map(|(p, a)| a * p.eval(&x).expect("finite"))
                .sum();
            let got = combined.eval(&x).expect("finite");
            trial_dev = trial_dev.max((got - want).abs());
        }
        max_deviation = max_deviation.max(trial_dev);
        if trial_dev > tolerance {
            failures += 1;
        }
    }
    SuiteReport { suite: "combine".into(), trials, failures, max_deviation, tolerance }
}

/// Absorbing an affine change of variables into the input-facing weights
/// must reproduce `H(s·x + t)` exactly.
fn reparam_suite(seed: u64) -> SuiteReport {
    let tolerance = 1e-11;
    let mut rng = SplitMix64::new(seed);
    let mut failures = 0;
    let mut max_deviation = 0.0f64;
    let trials = 100;
    for trial in 0..trials {
        let depth = trial % 4;
        let widths = random_widths(&mut rng, depth, 6);
        let net = ScalarNet::from_vector(random_net(&mut rng, 1, &widths, Activation::Tanh))
            .expect("scalar nets from one-input nets");
        let magnitude = rng.uniform_in(0.5, 2.0);
        let scale = if rng.next_u64() % 2 == 0 { magnitude } else { -magnitude };
        let shift = rng.uniform_symmetric(1.0);
        let reparamed = reparam_affine(&net, scale, shift).expect("reparam is well-formed");
        let mut trial_dev = 0.0f64;
        for x in random_points(&mut rng, 1, 20, 1.0) {
            let want = net.eval(scale * x[0] + shift).expect("finite");
            let got = reparamed.eval(x[0]).expect("finite");
            trial_dev = trial_dev.max((got - want).abs());
        }
        max_deviation = max_deviation.max(trial_dev);
        if trial_dev > tolerance {
            failures += 1;
        }
    }
    SuiteReport { suite: "reparam".into(), trials, failures, max_deviation, tolerance }
}

/// Feeding a network through a depth-1 scalar head (with no direct input
/// term) must equal evaluating the head at the network's value.
fn compose_suite(seed: u64) -> SuiteReport {
    let tolerance = 1e-11;
    let mut rng = SplitMix64::new(seed);
    let mut failures = 0;
    let mut max_deviation = 0.0f64;
    let trials = 100;
    for trial in 0..trials {
        let n = 1 + trial % 2;
        let depth = trial % 3;
        let widths = random_widths(&mut rng, depth, 5);
        let inner = random_net(&mut rng, n, &widths, Activation::Tanh);
        let neurons: Vec<(f64, f64, f64)> = (0..1 + (rng.next_u64() as usize) % 4)
            .map(|_| {
                (
                    rng.uniform_symmetric(1.5),
                    rng.uniform_symmetric(1.0),
                    rng.uniform_symmetric(1.5),
                )
            })
            .collect();
        let outer =
            ScalarNet::single_hidden(Activation::Tanh, &neurons, 0.0, rng.uniform_symmetric(1.0))
                .expect("outer head is well-formed");
        let composed = compose_shallow(&outer, &inner).expect("composition is well-formed");
        let mut trial_dev = 0.0f64;
        for x in random_points(&mut rng, n, 20, 1.0) {
            let want = outer.eval(inner.eval(&x).expect("finite")).expect("finite");
            let got = composed.eval(&x).expect("finite");
            trial_dev = trial_dev.max((got - want).abs());
        }
        max_deviation = max_deviation.max(trial_dev);
        if trial_dev > tolerance {
            failures += 1;
        }
    }
    SuiteReport { suite: "compose".into(), trials, failures, max_deviation, tolerance }
}

/// Analytic gradients must match central finite differences to a relative
/// accuracy of `1e-5` (absolute floor `1e-8`) across every parameter.
fn gradient_suite(seed: u64) -> SuiteReport {
    let tolerance = GRADIENT_REL_TOL;
    let mut rng = SplitMix64::new(seed);
    let mut failures = 0;
    let mut max_deviation = 0.0f64;
    let trials = 50;
    for trial in 0..trials {
        let n = 1 + trial % 3;
        let depth = trial % 4;
        let widths = random_widths(&mut rng, depth, 5);
        let activation = match trial % 3 {
            0 => Activation::Tanh,
            1 => Activation::Sigmoid,
            _ => Activation::Softplus,
        };
        let net = random_net(&mut rng, n, &widths, activation);
        let x = random_points(&mut rng, n, 1, 1.0).remove(0);
        let deviation = gradient_deviation(&net, &x).expect("smooth nets differentiate");
        max_deviation = max_deviation.max(deviation);
        if deviation > tolerance {
            failures += 1;
        }
    }
    SuiteReport { suite: "gradient-check".into(), trials, failures, max_deviation, tolerance }
}

/// Acceptance threshold for gradient checks: relative disagreement between
/// the analytic gradient and a central difference.
const GRADIENT_REL_TOL: f64 = 1e-5;
/// Absolute differences below this floor always pass — central differences
/// carry round-off noise near `1e-10` regardless of the gradient's size.
const GRADIENT_ABS_FLOOR: f64 = 1e-8;

/// Largest disagreement between the analytic gradient and a central finite
/// difference, swept over every stored parameter. The deviation is
/// `|analytic − fd| / (max(|analytic|, |fd|) + floor/rel)`, so comparing it
/// against [`GRADIENT_REL_TOL`] is exactly the combined test
/// `|analytic − fd| ≤ floor + rel · max(|analytic|, |fd|)`.
pub(crate) fn gradient_deviation(net: &VectorNet, x: &[f64]) -> Result<f64> {
    let analytic = backward(net, x, 1.0)?.flat();
    let base = net.flat_params();
    let mut worst = 0.0f64;
    for i in 0..base.len() {
        let h = 1e-6 * (1.0 + base[i].abs());
        let mut plus = base.clone();
        plus[i] += h;
        let mut minus = base.clone();
        minus[i] -= h;
        let fd = (net.with_flat_params(&plus)?.eval(x)?
            - net.with_flat_params(&minus)?.eval(x)?)
            / (2.0 * h);
        let scale = analytic[i].abs().max(fd.abs()) + GRADIENT_ABS_FLOOR / GRADIENT_REL_TOL;
        worst = worst.max((analytic[i] - fd).abs() / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes_on_a_fixed_seed() {
        for name in SUITES {
            let report = run_suite(name, 0xA11CE).unwrap();
            assert!(report.passed(), "{report}");
            assert!(report.max_deviation <= report.tolerance, "{report}");
        }
    }

    #[test]
    fn suites_are_reproducible() {
        for name in SUITES {
            let a = run_suite(name, 7).unwrap();
            let b = run_suite(name, 7).unwrap();
            assert_eq!(a.max_deviation.to_bits(), b.max_deviation.to_bits(), "{name}");
            assert_eq!(a.failures, b.failures);
        }
    }

    #[test]
    fn unknown_suite_is_a_usage_error_naming_the_options() {
        match run_suite("no-such-suite", 0) {
            Err(Error::InvalidArgument(msg)) => {
                for name in SUITES {
                    assert!(msg.contains(name), "{msg} should mention {name}");
                }
            }
            other => panic!("expected an invalid-argument error, got {other:?}"),
        }
    }

    #[test]
    fn report_display_carries_the_verdict() {
        let report = run_suite("pad-depth", 3).unwrap();
        let line = report.to_string();
        assert!(line.starts_with("pad-depth: pass"), "{line}");
        assert!(line.contains("100 trials"), "{line}");
    }
}
