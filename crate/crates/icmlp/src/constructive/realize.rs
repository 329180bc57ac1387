//! End-to-end construction: decide affine vs. genuinely nonlinear, fit a
//! polynomial to the target, realize the polynomial as a network, measure
//! the result on dense grids, and certify what was measured.
//!
//! The tolerance is split three ways: 45% for the polynomial fit, 5% as an
//! allowance for trimmed (dropped) coefficients, and 45% for realizing the
//! polynomial with approximate squares; the remainder absorbs second-order
//! growth of the propagated bounds. The headline numbers in the returned
//! [`Certificate`] are always *measured* — the ledger's a-priori bounds ride
//! along for accounting.

use std::collections::HashMap;

use crate::activation::Activation;
use crate::algebra::{linear_combine, offset_output, scale};
use crate::domain::{default_grid_density, sup_against, BoxDomain};
use crate::error::{Error, Result};
use crate::net::VectorNet;

use super::chebyshev::{fit_adaptive_1d, fit_adaptive_nd, ChebFit1D, ChebFitND};
use super::product::{product_net, square_net};
use super::square::{certified_square, SquareApprox};
use super::{ApproxRequest, Certificate, ErrorLedger};

/// Tolerance fraction spent on the polynomial fit.
const FIT_FRACTION: f64 = 0.45;
/// Tolerance fraction allowed for coefficients dropped during trimming.
const TRIM_FRACTION: f64 = 0.05;
/// Tolerance fraction spent on realizing the polynomial as a network.
const REALIZE_FRACTION: f64 = 0.45;
/// Input range the square approximator must serve. Chebyshev factors stay
/// in [−1, 1] and pairwise sums in [−2, 2]; 3 leaves margin for bound creep
/// and the 10% range-check headroom.
const SQUARE_RANGE: f64 = 3.0;
/// Fixed probe density per axis for the affine necessity gate. Deliberately
/// independent of the requested tolerance: whether a target is affine is a
/// property of the target, not of how accurately we want it.
const AFFINE_PROBE: usize = 33;
/// Cap on the per-unit square budget so propagated bounds stay small enough
/// for every intermediate to fit the square's input range.
const MAX_SQUARE_BUDGET: f64 = 0.05;
/// Per-unit budget multipliers tried in order. Width scales roughly as the
/// inverse square root of the budget, so the first (loose) attempt yields a
/// network near an eighth the size; measurement decides whether it stands,
/// and the final entry is the fully conservative allocation.
const REALIZE_OPTIMISM: &[f64] = &[8.0, 1.0];

/// Build a network approximating `req.target` on `req.domain` to sup-norm
/// tolerance `req.tol`, returning it with a measured [`Certificate`].
///
/// Affine targets are represented exactly (depth 0) under any activation.
/// Nonaffine targets under an affine activation fail immediately with
/// [`Error::AffineActivation`], at every tolerance. Otherwise the target is
/// fitted by an adaptive Chebyshev polynomial and realized term by term from
/// certified square approximators; if the requested tolerance cannot be met
/// within `req.budget`, the error carries the best certificate achieved.
pub fn approximate(req: &ApproxRequest<'_>) -> Result<(VectorNet, Certificate)> {
    if !(req.tol.is_finite() && req.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive and finite".into()));
    }
    let threads = req.threads.max(1);
    let domain = &req.domain;
    let target = |x: &[f64]| (req.target)(x);

    // Necessity gate: is the target affine? Fixed probe, fixed threshold.
    let affine_net = affine_interpolant(&target, domain, req.activation)?;
    let residual = {
        let f = |x: &[f64]| affine_net.eval(x);
        sup_against(domain, AFFINE_PROBE, threads, &f, &target)?.sup
    };
    let scale_of_target = {
        let zero = |_: &[f64]| Ok(0.0);
        sup_against(domain, AFFINE_PROBE, threads, &zero, &target)?.sup
    };
    let gate = 1e-8 * (1.0 + scale_of_target);

    if residual > gate && req.activation.is_affine() {
        return Err(Error::AffineActivation(format!(
            "activation '{}' makes every network an affine map of its input, \
             but the target deviates from the best affine fit by {residual:.3e} \
             (threshold {gate:.3e}); no parameters can close that gap",
            req.activation.name(),
        )));
    }

    if residual <= gate {
        // The target is affine: the interpolant is already (numerically)
        // exact, so certify it directly.
        let (grid, recheck) = grid_densities(domain.dim(), req);
        let f = |x: &[f64]| affine_net.eval(x);
        let measured = sup_against(domain, grid, threads, &f, &target)?;
        let rechecked = sup_against(domain, recheck, threads, &f, &target)?;
        let claimed = residual.max(measured.sup).max(rechecked.sup);
        let ledger = ErrorLedger {
            quadrature_mass_deviation: 0.0,
            square_stage: 0.0,
            composition: 0.0,
            truncation: claimed,
            truncation_measured: measured.sup,
        };
        let cert = Certificate {
            tolerance: req.tol,
            measured_sup_error: measured.sup,
            recheck_sup_error: rechecked.sup,
            certified_bound: ledger.claimed_bound(),
            grid_per_axis: grid,
            recheck_per_axis: recheck,
            ledger,
        };
        if measured.sup <= req.tol && rechecked.sup <= req.tol * 1.05 {
            return Ok((affine_net, cert));
        }
        return Err(Error::BudgetExhausted {
            achieved: measured.sup,
            tol: req.tol,
            certificate: Box::new(cert),
        });
    }

    nonlinear_pipeline(req, &target, threads)
}

/// The affine map interpolating the target at the domain center and matching
/// its full-span secant along each axis. Exact (up to rounding) whenever the
/// target itself is affine.
fn affine_interpolant(
    target: &(impl Fn(&[f64]) -> f64 + ?Sized),
    domain: &BoxDomain,
    activation: Activation,
) -> Result<VectorNet> {
    let center = domain.center();
    let f0 = target(&center);
    if !f0.is_finite() {
        return Err(Error::NonFiniteParam("target sample"));
    }
    let mut c = vec![0.0; domain.dim()];
    for axis in 0..domain.dim() {
        let (lo, hi) = domain.side(axis);
        let mut at_lo = center.clone();
        at_lo[axis] = lo;
        let mut at_hi = center.clone();
        at_hi[axis] = hi;
        let (flo, fhi) = (target(&at_lo), target(&at_hi));
        if !(flo.is_finite() && fhi.is_finite()) {
            return Err(Error::NonFiniteParam("target sample"));
        }
        c[axis] = (fhi - flo) / (hi - lo);
    }
    let d = f0 - c.iter().zip(&center).map(|(ci, xi)| ci * xi).sum::<f64>();
    VectorNet::affine_with_activation(c, d, activation)
}

/// Construction and recheck grid densities: the recheck is always twice the
/// construction density, and both respect the probe budget.
fn grid_densities(dim: usize, req: &ApproxRequest<'_>) -> (usize, usize) {
    let grid = default_grid_density(dim).min(req.budget.max_probe_density / 2).max(3);
    (grid, 2 * grid)
}

/// A polynomial fit in either one or several variables, reduced to a common
/// term representation.
enum Fit {
    One(ChebFit1D),
    Many(ChebFitND),
}

impl Fit {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Fit::One(f) => f.eval(x[0]),
            Fit::Many(f) => f.eval(x),
        }
    }

    fn coeff_count(&self) -> usize {
        match self {
            Fit::One(f) => f.coeffs().len(),
            Fit::Many(f) => f.coeffs().len(),
        }
    }

    /// Terms with |coefficient| above `threshold`, plus the total absolute
    /// mass dropped. Since |T_k| ≤ 1 on the reference cube, the dropped mass
    /// bounds the sup-norm cost of trimming.
    fn terms(&self, threshold: f64) -> (Vec<(Vec<usize>, f64)>, f64) {
        match self {
            Fit::One(f) => {
                let mut kept = Vec::new();
                let mut dropped = 0.0;
                for (k, &a) in f.coeffs().iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    if a.abs() > threshold {
                        kept.push((vec![k], a));
                    } else {
                        dropped += a.abs();
                    }
                }
                (kept, dropped)
            }
            Fit::Many(f) => f.terms(threshold),
        }
    }
}

/// Per-axis map into reference coordinates: `t = s·x + o` with `t ∈ [−1, 1]`.
fn reference_maps(domain: &BoxDomain) -> Vec<(f64, f64)> {
    (0..domain.dim())
        .map(|axis| {
            let (lo, hi) = domain.side(axis);
            (2.0 / (hi - lo), -(lo + hi) / (hi - lo))
        })
        .collect()
}

/// First-order cost of realizing `T_k` in units of the square budget:
/// the coefficient of `e_P` in the propagated bound, ignoring quadratic
/// terms. Used only to split the realization budget across terms; the
/// certified bounds themselves use the full recursion.
fn chebyshev_units(k: usize, memo: &mut HashMap<usize, f64>) -> f64 {
    if k <= 1 {
        return 0.0;
    }
    if let Some(&u) = memo.get(&k) {
        return u;
    }
    let u = if k % 2 == 0 {
        2.0 + 4.0 * chebyshev_units(k / 2, memo)
    } else {
        3.0 + 2.0 * chebyshev_units(k / 2, memo) + 2.0 * chebyshev_units(k / 2 + 1, memo)
    };
    memo.insert(k, u);
    u
}

/// First-order cost of a whole term: its factors plus one product fold per
/// extra factor.
fn term_units(multi: &[usize], memo: &mut HashMap<usize, f64>) -> f64 {
    let factors: Vec<usize> = multi.iter().copied().filter(|&k| k >= 1).collect();
    let base: f64 = factors.iter().map(|&k| chebyshev_units(k, memo)).sum();
    base + 1.5 * (factors.len().saturating_sub(1)) as f64
}

/// Memoized realization of reference-coordinate Chebyshev polynomials as
/// networks, one entry per (axis, degree), each carrying a propagated
/// sup-norm bound against the exact `T_k(t_axis(x))`.
struct Realizer<'a> {
    sq: &'a SquareApprox,
    domain: &'a BoxDomain,
    maps: &'a [(f64, f64)],
    activation: Activation,
    threads: usize,
    memo: HashMap<(usize, usize), (VectorNet, f64)>,
}

impl Realizer<'_> {
    /// `T_k` along one axis: `T_1` is an exact affine map; even degrees come
    /// from `T_{2k} = 2T_k² − 1`, odd from `T_{2k+1} = 2·T_k·T_{k+1} − T_1`.
    fn axis_net(&mut self, axis: usize, k: usize) -> Result<(VectorNet, f64)> {
        debug_assert!(k >= 1);
        if let Some(hit) = self.memo.get(&(axis, k)) {
            return Ok(hit.clone());
        }
        let dim = self.domain.dim();
        let built = if k == 1 {
            let (s, o) = self.maps[axis];
            let mut c = vec![0.0; dim];
            c[axis] = s;
            (VectorNet::affine_with_activation(c, o, self.activation)?, 0.0)
        } else if k % 2 == 0 {
            let (half, b) = self.axis_net(axis, k / 2)?;
            let squared = square_net(self.sq, &half, self.domain, self.threads)?;
            let net = offset_output(&scale(&squared, 2.0)?, -1.0)?;
            (net, 2.0 * (self.sq.sup_error + b * (2.0 + b)))
        } else {
            let (left, bl) = self.axis_net(axis, k / 2)?;
            let (right, br) = self.axis_net(axis, k / 2 + 1)?;
            let prod = product_net(self.sq, &left, &right, self.domain, self.threads)?;
            let (t1, _) = self.axis_net(axis, 1)?;
            let net = linear_combine(&[&prod, &t1], &[2.0, -1.0])?;
            (net, 2.0 * (1.5 * self.sq.sup_error + bl + br * (1.0 + bl)))
        };
        self.memo.insert((axis, k), built.clone());
        Ok(built)
    }

    /// One polynomial term `Π_j T_{k_j}(t_j)`: axis factors folded together
    /// with product networks. Exact factors (`T_k` with k ≤ 1) still cost a
    /// product fold; their own bound is zero.
    fn term_net(&mut self, multi: &[usize]) -> Result<(VectorNet, f64)> {
        let mut acc: Option<(VectorNet, f64)> = None;
        for (axis, &k) in multi.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let (factor, bf) = self.axis_net(axis, k)?;
            acc = Some(match acc {
                None => (factor, bf),
                Some((left, bl)) => {
                    let prod = product_net(self.sq, &left, &factor, self.domain, self.threads)?;
                    // |uv − LF| ≤ 1.5e_P + b_l·sup|F| + b_f·(sup|L| + b_l),
                    // and every exact factor/partial product has sup ≤ 1.
                    (prod, 1.5 * self.sq.sup_error + bl + bf * (1.0 + bl))
                }
            });
        }
        Ok(acc.expect("term_net requires at least one nonconstant factor"))
    }
}

/// Fit, realize, measure, certify.
fn nonlinear_pipeline(
    req: &ApproxRequest<'_>,
    target: &(impl Fn(&[f64]) -> f64 + Sync),
    threads: usize,
) -> Result<(VectorNet, Certificate)> {
    let domain = &req.domain;
    let dim = domain.dim();
    let fit_target = FIT_FRACTION * req.tol;
    let trim_budget = TRIM_FRACTION * req.tol;

    // Stage 1: adaptive polynomial fit. If the degree budget runs out, fall
    // back to the densest allowed fit so the failure still carries an honest
    // best-effort certificate.
    let fit_probe = match dim {
        1 => 513.min(req.budget.max_probe_density).max(33),
        2 => 65.min(req.budget.max_probe_density).max(9),
        _ => 17.min(req.budget.max_probe_density).max(5),
    };
    let fitted: Result<(Fit, f64)> = if dim == 1 {
        let (lo, hi) = domain.side(0);
        let f1 = |x: f64| target(&[x]);
        fit_adaptive_1d(f1, lo, hi, fit_target, req.budget.max_degree, fit_probe)
            .map(|(fit, sup)| (Fit::One(fit), sup))
    } else {
        fit_adaptive_nd(target, domain, fit_target, req.budget.max_degree, fit_probe)
            .map(|(fit, sup)| (Fit::Many(fit), sup))
    };
    let (fit, fit_sampled) = match fitted {
        Ok(pair) => pair,
        Err(Error::DegreeBudget { .. }) => {
            let fit = if dim == 1 {
                let (lo, hi) = domain.side(0);
                let f1 = |x: f64| target(&[x]);
                Fit::One(ChebFit1D::fit(f1, lo, hi, req.budget.max_degree + 1)?)
            } else {
                Fit::Many(ChebFitND::fit(target, domain, &vec![req.budget.max_degree + 1; dim])?)
            };
            let f = |x: &[f64]| Ok(fit.eval(x));
            let sampled = sup_against(domain, fit_probe, threads, &f, target)?.sup;
            (fit, sampled)
        }
        Err(e) => return Err(e),
    };

    // Trim negligible coefficients; the dropped mass is charged to the
    // truncation bound.
    let threshold = trim_budget / fit.coeff_count() as f64;
    let (terms, dropped) = fit.terms(threshold);

    // Split terms into an exactly-representable affine part and nonlinear
    // terms that need square approximators.
    let maps = reference_maps(domain);
    let mut c_exact = vec![0.0; dim];
    let mut d_exact = 0.0;
    let mut nonlinear: Vec<(Vec<usize>, f64)> = Vec::new();
    for (multi, a) in terms {
        match multi.iter().sum::<usize>() {
            0 => d_exact += a,
            1 => {
                let axis = multi.iter().position(|&k| k == 1).expect("degree-1 term");
                let (s, o) = maps[axis];
                c_exact[axis] += a * s;
                d_exact += a * o;
            }
            _ => nonlinear.push((multi, a)),
        }
    }

    // Stage 2: size the square budget by first-order cost and realize;
    // stage 3: measure on the construction grid, recheck on a fresh grid of
    // twice the density, and certify. The per-unit allocation that provably
    // lands inside the realization budget is very pessimistic in practice
    // (propagated bounds assume every unit errs maximally in the same
    // direction), and network width grows as the inverse square root of the
    // per-unit budget — so try a loosened allocation first and keep it when
    // the *measured* error passes; fall back to the conservative allocation
    // otherwise. Success is always decided by measurement, never by the
    // a-priori accounting.
    let mut units_memo = HashMap::new();
    let total_units: f64 = nonlinear
        .iter()
        .map(|(multi, a)| a.abs() * term_units(multi, &mut units_memo))
        .sum();
    let (grid, recheck) = grid_densities(dim, req);

    let build_and_measure = |per_unit: f64| -> Result<(VectorNet, Certificate)> {
        let mut composition = 0.0;
        let mut square_stage = 0.0;
        let mut mass_deviation = 0.0;
        let net = if nonlinear.is_empty() {
            VectorNet::affine_with_activation(c_exact.clone(), d_exact, req.activation)?
        } else {
            let sq =
                certified_square(req.activation, SQUARE_RANGE, per_unit, &req.budget, threads)?;
            square_stage = sq.sup_error;
            mass_deviation = sq.mass_deviation;
            let mut realizer = Realizer {
                sq: &sq,
                domain,
                maps: &maps,
                activation: req.activation,
                threads,
                memo: HashMap::new(),
            };
            let mut nets = Vec::with_capacity(nonlinear.len());
            let mut coeffs = Vec::with_capacity(nonlinear.len());
            for (multi, a) in &nonlinear {
                let (term, bound) = realizer.term_net(multi)?;
                composition += a.abs() * bound;
                nets.push(term);
                coeffs.push(*a);
            }
            let refs: Vec<&VectorNet> = nets.iter().collect();
            let mut combined = linear_combine(&refs, &coeffs)?;
            for (slot, add) in combined.output.input.iter_mut().zip(&c_exact) {
                *slot += add;
            }
            combined.output.bias += d_exact;
            combined.validate()?;
            combined
        };

        let f = |x: &[f64]| net.eval(x);
        let measured = sup_against(domain, grid, threads, &f, target)?;
        let rechecked = sup_against(domain, recheck, threads, &f, target)?;
        let ledger = ErrorLedger {
            quadrature_mass_deviation: mass_deviation,
            square_stage,
            composition,
            truncation: fit_sampled + dropped,
            truncation_measured: fit_sampled,
        };
        let cert = Certificate {
            tolerance: req.tol,
            measured_sup_error: measured.sup,
            recheck_sup_error: rechecked.sup,
            certified_bound: ledger.claimed_bound(),
            grid_per_axis: grid,
            recheck_per_axis: recheck,
            ledger,
        };
        Ok((net, cert))
    };
    let passes =
        |cert: &Certificate| cert.measured_sup_error <= req.tol && cert.recheck_sup_error <= req.tol * 1.05;

    let conservative = (REALIZE_FRACTION * req.tol / total_units.max(f64::MIN_POSITIVE))
        .min(MAX_SQUARE_BUDGET);
    let mut ladder: Vec<f64> = REALIZE_OPTIMISM
        .iter()
        .map(|optimism| (conservative * optimism).min(MAX_SQUARE_BUDGET))
        .collect();
    ladder.dedup(); // a capped loose attempt equals the conservative one
    let mut last: Option<(VectorNet, Certificate)> = None;
    for (attempt, &per_unit) in ladder.iter().enumerate() {
        let is_last = attempt + 1 == ladder.len();
        match build_and_measure(per_unit) {
            Ok((net, cert)) => {
                if passes(&cert) {
                    return Ok((net, cert));
                }
                last = Some((net, cert));
            }
            // A loosened allocation can push intermediates past the square's
            // certified range or a stage budget; those failures only rule
            // out the shortcut, not the construction.
            Err(Error::RangeOverflow { .. } | Error::StageBudgetExceeded { .. })
                if !is_last => {}
            Err(e) => return Err(e),
        }
        if nonlinear.is_empty() {
            break; // the affine part does not depend on the allocation
        }
    }
    let (_, cert) = last.ok_or_else(|| Error::InvalidArgument(
        "internal: realization produced no candidate".into(),
    ))?;
    Err(Error::BudgetExhausted {
        achieved: cert.measured_sup_error,
        tol: req.tol,
        certificate: Box::new(cert),
    })
}
