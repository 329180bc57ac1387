//! Square approximators: networks certified to track `x ↦ x²` on a range.
//!
//! For a smooth profile `S` with curvature `s2 ≈ S''(x0)`, the scaled
//! symmetric second difference
//!
//! ```text
//! T_δ(x) = [S(x0 + δx) + S(x0 − δx) − 2·S(x0)] / (δ²·s2)
//! ```
//!
//! converges to `x²` as δ shrinks. [`build_square`] realizes `T_δ` as one
//! network and certifies it by measuring `sup |T_δ(x) − x²|` on a dense
//! grid. [`certified_square`] is the retry driver that picks smoothing
//! parameters and δ automatically — with a dedicated exact-interpolation
//! path for relu, whose piecewise-linear structure represents chords of the
//! parabola with no smoothing at all.

use crate::activation::Activation;
use crate::algebra::{linear_combine, offset_output, reparam_affine};
use crate::constructive::curvature::{find_curvature, CurvaturePoint};
use crate::constructive::mollifier::{build_mollified, MollifierSpec};
use crate::constructive::Budget;
use crate::domain::{sup_against, BoxDomain};
use crate::error::{Error, Result};
use crate::net::ScalarNet;

/// Measurement density for square certificates.
const SQUARE_GRID: usize = 2001;

/// A network `net ≈ x²` with a measured certificate.
#[derive(Debug, Clone)]
pub struct SquareApprox {
    /// The approximator; depth 1, no direct input-to-output term (c = 0).
    pub net: ScalarNet,
    /// Certified on `[−range, range]`.
    pub range: f64,
    /// Measured `sup |net(x) − x²|` over the certification grid.
    pub sup_error: f64,
    /// |Σλ − 1| of the smoothing quadrature (0 for the relu path).
    pub mass_deviation: f64,
}

impl SquareApprox {
    /// Evaluate the approximator.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.net.eval(x)
    }
}

/// Build `T_δ` from a smoothed profile and measure it on `[−range, range]`.
///
/// The network is the linear combination of `S(x0 + δx)` and `S(x0 − δx)`
/// (two affine reparameterizations of `s_net`) with coefficients
/// `1/(δ²·s2)`, plus the constant `−2·S(x0)/(δ²·s2)` folded into the output
/// bias. Both reparameterizations keep c = 0, so the result has no direct
/// linear term; c is pinned to exactly 0.
///
/// Fails with [`Error::StageBudgetExceeded`] if the measured sup error is
/// above `stage_budget` (the caller then shrinks δ, down to the floor where
/// the curvature estimate's own noise dominates).
pub fn build_square(
    curv: &CurvaturePoint,
    s_net: &ScalarNet,
    delta: f64,
    range: f64,
    stage_budget: f64,
    threads: usize,
) -> Result<SquareApprox> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::NonFiniteParam("difference scale delta"));
    }
    if !(range.is_finite() && range > 0.0) {
        return Err(Error::NonFiniteParam("certification range"));
    }
    if !(stage_budget.is_finite() && stage_budget > 0.0) {
        return Err(Error::NonFiniteParam("stage budget"));
    }
    let k = 1.0 / (delta * delta * curv.s2);
    if !k.is_finite() {
        return Err(Error::NonFiniteParam("curvature scale 1/(delta^2 s2)"));
    }

    let plus = reparam_affine(s_net, delta, curv.x0)?;
    let minus = reparam_affine(s_net, -delta, curv.x0)?;
    let combined = linear_combine(&[plus.as_vector(), minus.as_vector()], &[k, k])?;
    let s0 = s_net.eval(curv.x0)?;
    let mut shifted = offset_output(&combined, -2.0 * s0 * k)?;
    // The combination of two c = 0 nets already has c = 0; pin it exactly.
    debug_assert_eq!(shifted.output().input_weights()[0], 0.0);
    shifted.output.input[0] = 0.0;
    let t_net = ScalarNet::from_vector(shifted)?;

    let domain = BoxDomain::interval(-range, range)?;
    let measured = sup_against(
        &domain,
        SQUARE_GRID,
        threads,
        &|x: &[f64]| t_net.as_vector().eval(x),
        &|x: &[f64]| x[0] * x[0],
    )?;
    if measured.sup > stage_budget {
        return Err(Error::StageBudgetExceeded { measured: measured.sup, budget: stage_budget });
    }
    Ok(SquareApprox { net: t_net, range, sup_error: measured.sup, mass_deviation: 0.0 })
}

/// Refine the curvature estimate by one Richardson step: combining the
/// second differences at steps `h` and `h/2` cancels the leading `h²` bias,
/// which otherwise caps how small a δ is worth using.
fn richardson_refine(s_net: &ScalarNet, curv: &CurvaturePoint) -> Result<CurvaturePoint> {
    let h = curv.fd_step;
    let center = s_net.eval(curv.x0)?;
    let half = 0.5 * h;
    let d_half =
        (s_net.eval(curv.x0 + half)? - 2.0 * center + s_net.eval(curv.x0 - half)?) / (half * half);
    let s2 = (4.0 * d_half - curv.s2) / 3.0;
    if !(s2.is_finite() && s2 != 0.0) {
        return Err(Error::CurvatureNotFound { max_found: s2.abs(), floor: f64::MIN_POSITIVE });
    }
    Ok(CurvaturePoint { x0: curv.x0, s2, fd_step: h })
}

/// Build a square approximator for `activation` on `[−range, range]` with
/// measured error at most `stage_budget`.
///
/// Relu gets an exact construction: the piecewise-linear interpolant of x²
/// on `n` equal segments (error `range²/n²`), realized with one neuron per
/// interior knot plus a relu pair for the entering slope. Everything else
/// goes through smoothing: probe parameters `(ε, a, b)` are tried in a
/// fixed ladder, curvature is located, and δ shrinks until the measured
/// error fits the budget.
pub fn certified_square(
    activation: Activation,
    range: f64,
    stage_budget: f64,
    budget: &Budget,
    threads: usize,
) -> Result<SquareApprox> {
    if activation.is_affine() {
        return Err(Error::AffineActivation(activation.name().to_string()));
    }
    if !(range.is_finite() && range > 0.0) {
        return Err(Error::NonFiniteParam("certification range"));
    }
    if !(stage_budget.is_finite() && stage_budget > 0.0) {
        return Err(Error::NonFiniteParam("stage budget"));
    }
    match activation {
        Activation::Relu => relu_square(range, stage_budget, budget, threads),
        act => smoothed_square(act, range, stage_budget, budget, threads),
    }
}

/// Exact chord interpolant of x² on [−range, range] with relu neurons.
fn relu_square(
    range: f64,
    stage_budget: f64,
    budget: &Budget,
    threads: usize,
) -> Result<SquareApprox> {
    // Interpolation error of x² over n equal segments is exactly range²/n².
    // Aim for half the budget to leave room for rounding.
    let ideal = (range / (0.5 * stage_budget).sqrt()).ceil() as usize;
    let cap = budget.max_quadrature_nodes.max(4);
    let n = ideal.clamp(2, cap);

    let step = 2.0 * range / n as f64;
    let knot = |i: usize| -> f64 { -range + i as f64 * step };
    let slope = |i: usize| -> f64 { knot(i) + knot(i + 1) };

    let mut neurons: Vec<(f64, f64, f64)> = Vec::with_capacity(n + 1);
    // Entering affine piece m0·x + (t0² − m0·t0), with the linear part
    // realized as m0·relu(x) − m0·relu(−x) to keep c = 0.
    let m0 = slope(0);
    neurons.push((1.0, 0.0, m0));
    neurons.push((-1.0, 0.0, -m0));
    for i in 1..n {
        neurons.push((1.0, -knot(i), slope(i) - slope(i - 1)));
    }
    let d = knot(0) * knot(0) - m0 * knot(0);
    let net = ScalarNet::single_hidden(Activation::Relu, &neurons, 0.0, d)?;

    let domain = BoxDomain::interval(-range, range)?;
    let measured = sup_against(
        &domain,
        SQUARE_GRID,
        threads,
        &|x: &[f64]| net.as_vector().eval(x),
        &|x: &[f64]| x[0] * x[0],
    )?;
    if measured.sup > stage_budget {
        return Err(Error::StageBudgetExceeded { measured: measured.sup, budget: stage_budget });
    }
    Ok(SquareApprox { net, range, sup_error: measured.sup, mass_deviation: 0.0 })
}

fn smoothed_square(
    activation: Activation,
    range: f64,
    stage_budget: f64,
    budget: &Budget,
    threads: usize,
) -> Result<SquareApprox> {
    // Probe ladder: default (ε, a, b) first, then steeper probes and
    // shifted biases for activations whose curvature hides elsewhere.
    const LADDER: &[(f64, f64, f64)] = &[
        (0.5, 1.0, 0.0),
        (0.5, 2.0, 0.0),
        (0.5, 4.0, 0.0),
        (1.0, 1.0, 0.0),
        (0.25, 1.0, 0.0),
        (0.5, 1.0, 0.5),
        (0.5, 1.0, -0.5),
        (0.5, 2.0, 0.5),
        (1.0, 1.0, 1.0),
    ];
    // Node counts grow only when the quadrature floor blocks the budget, so
    // the first success is also close to the narrowest adequate network.
    let node_ladder = [101_usize, 201, 401, 801];
    let mut best_measured = f64::INFINITY;
    let mut failure: Option<Error> = None;

    for &nodes in node_ladder.iter().filter(|&&m| m <= budget.max_quadrature_nodes.max(101)) {
        for &(eps, a, b) in LADDER {
            let spec = match MollifierSpec::new(eps, nodes, a, b) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let s_net = build_mollified(&spec, activation)?;
            let window = 4.0_f64.max(4.0 * eps);
            let curv = match find_curvature(&s_net, window, 4001, eps / 20.0) {
                Ok(c) => c,
                Err(e) => {
                    failure.get_or_insert(e);
                    continue;
                }
            };
            let refined = richardson_refine(&s_net, &curv)?;

            // δ shrinks geometrically until the measurement fits the budget
            // or hits the floor where curvature-estimate noise dominates.
            let mut delta = 0.5;
            while delta > 1e-3 {
                match build_square(&refined, &s_net, delta, range, stage_budget, threads) {
                    Ok(mut sq) => {
                        sq.mass_deviation = spec.mass_deviation();
                        return Ok(sq);
                    }
                    Err(Error::StageBudgetExceeded { measured, .. }) => {
                        best_measured = best_measured.min(measured);
                        delta *= 0.5;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }

    if best_measured.is_finite() {
        Err(Error::StageBudgetExceeded { measured: best_measured, budget: stage_budget })
    } else {
        Err(failure.unwrap_or(Error::InvalidArgument(
            "no smoothing parameters produced a usable profile".into(),
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tanh_profile() -> (ScalarNet, CurvaturePoint, MollifierSpec) {
        let spec = MollifierSpec::new(0.5, 401, 1.0, 0.0).unwrap();
        let s = build_mollified(&spec, Activation::Tanh).unwrap();
        let curv = find_curvature(&s, 2.0, 2001, 0.5 / 20.0).unwrap();
        (s, curv, spec)
    }

    #[test]
    fn shrinking_delta_improves_the_square() {
        let (s, curv, _) = tanh_profile();
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&d| build_square(&curv, &s, d, 1.0, 1.0, 1).unwrap().sup_error)
            .collect();
        assert!(
            errs[0] > errs[1] && errs[1] > errs[2],
            "expected monotone decrease, got {errs:?}"
        );
    }

    #[test]
    fn the_square_vanishes_at_zero_and_is_even() {
        let (s, curv, _) = tanh_profile();
        let sq = build_square(&curv, &s, 0.1, 1.0, 1.0, 1).unwrap();
        // T(0) is a cancellation of identical values; only rounding remains.
        assert!(sq.eval(0.0).unwrap().abs() <= 1e-9);
        // Symmetric construction: T(−x) and T(x) differ only by summation
        // order of the two blocks.
        let plus = sq.eval(1.0).unwrap();
        let minus = sq.eval(-1.0).unwrap();
        assert!((plus + minus - 2.0 * plus).abs() <= 1e-10, "{plus} vs {minus}");
        // No direct linear term.
        assert_eq!(sq.net.out_input_weight(), 0.0);
        assert_eq!(sq.net.depth(), 1);
        assert_eq!(sq.net.widths(), vec![802]);
    }

    #[test]
    fn budget_misses_report_the_measured_error() {
        let (s, curv, _) = tanh_profile();
        match build_square(&curv, &s, 0.2, 1.0, 1e-12, 1) {
            Err(Error::StageBudgetExceeded { measured, budget }) => {
                assert!(measured > 1e-12);
                assert_eq!(budget, 1e-12);
            }
            other => panic!("expected StageBudgetExceeded, got {other:?}"),
        }
    }

    #[test]
    fn relu_square_interpolates_exactly_at_chord_rate() {
        let sq = certified_square(Activation::Relu, 3.0, 1e-3, &Budget::default(), 1).unwrap();
        assert!(sq.sup_error <= 1e-3, "measured {}", sq.sup_error);
        assert_eq!(sq.net.out_input_weight(), 0.0);
        assert_eq!(sq.mass_deviation, 0.0);
        // n was sized for range²/n² ≤ budget/2; the measured error should
        // sit near that theoretical chord error, not far below or above.
        let n = (sq.net.widths()[0] - 1) as f64;
        let theory = sq.range * sq.range / (n * n);
        assert!(sq.sup_error <= theory * 1.001);
        assert!(sq.sup_error >= theory * 0.5, "measured {} vs theory {theory}", sq.sup_error);
        // Spot-check some values.
        for &x in &[-2.5, -1.0, 0.0, 0.3, 2.9] {
            assert!((sq.eval(x).unwrap() - x * x).abs() <= sq.sup_error + 1e-12);
        }
    }

    #[test]
    fn smoothed_square_meets_a_modest_budget() {
        let sq = certified_square(Activation::Tanh, 1.0, 1e-2, &Budget::default(), 1).unwrap();
        assert!(sq.sup_error <= 1e-2);
        assert!(sq.mass_deviation <= 1e-6);
        assert_eq!(sq.net.out_input_weight(), 0.0);
        for &x in &[-1.0, -0.4, 0.2, 0.9] {
            assert!((sq.eval(x).unwrap() - x * x).abs() <= sq.sup_error + 1e-12);
        }
    }

    #[test]
    fn sigmoid_and_softplus_also_produce_squares() {
        for act in [Activation::Sigmoid, Activation::Softplus] {
            let sq = certified_square(act, 1.0, 5e-2, &Budget::default(), 1).unwrap();
            assert!(sq.sup_error <= 5e-2, "{act:?}: {}", sq.sup_error);
        }
    }

    #[test]
    fn affine_activations_are_rejected_up_front() {
        match certified_square(
            Activation::Affine { slope: 1.0, intercept: 0.0 },
            1.0,
            0.1,
            &Budget::default(),
            1,
        ) {
            Err(Error::AffineActivation(_)) => {}
            other => panic!("expected AffineActivation, got {other:?}"),
        }
        assert!(matches!(
            certified_square(Activation::Identity, 1.0, 0.1, &Budget::default(), 1),
            Err(Error::AffineActivation(_))
        ));
    }

    #[test]
    fn impossible_budgets_surface_the_best_attempt() {
        // A budget below the curvature-noise floor cannot be met; the error
        // carries the best measured value so callers can report it. A small
        // node cap keeps the exhaustive parameter sweep cheap.
        let budget = Budget { max_quadrature_nodes: 101, ..Budget::default() };
        match certified_square(Activation::Tanh, 1.0, 1e-13, &budget, 1) {
            Err(Error::StageBudgetExceeded { measured, budget }) => {
                assert!(measured > budget);
            }
            other => panic!("expected StageBudgetExceeded, got {other:?}"),
        }
    }
}
