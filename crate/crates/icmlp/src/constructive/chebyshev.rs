//! Polynomial fitting by Chebyshev interpolation.
//!
//! Targets are sampled at first-kind Chebyshev points mapped onto the
//! domain; interpolation there is numerically stable, near-optimal in the
//! uniform norm, and the coefficients fall off fast for smooth targets, so
//! an adaptive node-doubling loop with a sampled sup-error stop rule makes
//! a practical fitting stage. Boxes use tensor products with the same node
//! ladder per axis.

use crate::domain::BoxDomain;
use crate::error::{Error, Result};

/// Node ladder for adaptive refinement.
const NODE_LADDER: &[usize] = &[5, 9, 17, 33, 65, 129, 257, 513, 1025];

fn cheb_angle(i: usize, n: usize) -> f64 {
    std::f64::consts::PI * (i as f64 + 0.5) / n as f64
}

/// p(x) = Σ_k a_k T_k(t), t the affine map of [lo, hi] onto [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ChebFit1D {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

impl ChebFit1D {
    /// Interpolate `f` at `n` Chebyshev points on [lo, hi].
    pub fn fit(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!("bad interval [{lo}, {hi}]")));
        }
        if n < 2 {
            return Err(Error::InvalidArgument("interpolation needs at least 2 nodes".into()));
        }
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let vals: Vec<f64> = (0..n)
            .map(|i| f(mid + half * cheb_angle(i, n).cos()))
            .collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteParam("target sample"));
        }
        let mut coeffs = vec![0.0; n];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut sum = 0.0;
            for (i, v) in vals.iter().enumerate() {
                sum += v * (k as f64 * cheb_angle(i, n)).cos();
            }
            *c = if k == 0 { sum / n as f64 } else { 2.0 * sum / n as f64 };
        }
        Ok(ChebFit1D { lo, hi, coeffs })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Coefficients a_0..a_{n−1} (a_0 is the true constant term).
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Map x into the reference coordinate t ∈ [−1, 1].
    pub fn to_reference(&self, x: f64) -> f64 {
        (2.0 * x - self.lo - self.hi) / (self.hi - self.lo)
    }

    pub fn eval(&self, x: f64) -> f64 {
        clenshaw(&self.coeffs, self.to_reference(x))
    }
}

/// Evaluate Σ a_k T_k(t) by the Clenshaw recurrence.
pub(crate) fn clenshaw(coeffs: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    let y = 2.0 * t;
    for &a in coeffs.iter().skip(1).rev() {
        let next = a + y * b1 - b2;
        b2 = b1;
        b1 = next;
    }
    coeffs.first().copied().unwrap_or(0.0) + t * b1 - b2
}

/// Refine a 1D fit until the sampled sup error on a uniform probe grid
/// drops to `target`, doubling the node count along [`NODE_LADDER`].
/// Returns the fit and its measured probe error.
pub fn fit_adaptive_1d(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    target: f64,
    max_degree: usize,
    probe: usize,
) -> Result<(ChebFit1D, f64)> {
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::NonFiniteParam("fit target"));
    }
    let probe = probe.max(3);
    let mut best: Option<(ChebFit1D, f64)> = None;
    for &n in NODE_LADDER.iter().filter(|&&n| n <= max_degree + 1) {
        let fit = ChebFit1D::fit(&f, lo, hi, n)?;
        let mut sup = 0.0_f64;
        for i in 0..probe {
            let x = lo + (hi - lo) * i as f64 / (probe - 1) as f64;
            sup = sup.max((f(x) - fit.eval(x)).abs());
        }
        if sup <= target {
            return Ok((fit, sup));
        }
        if best.as_ref().map_or(true, |(_, b)| sup < *b) {
            best = Some((fit, sup));
        }
    }
    let achieved = best.map(|(_, s)| s).unwrap_or(f64::INFINITY);
    Err(Error::DegreeBudget { achieved, needed: target, cap: max_degree })
}

/// Tensor-product fit: p(x) = Σ_k a_k Π_j T_{k_j}(t_j), coefficients stored
/// row-major with axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebFitND {
    domain: BoxDomain,
    nodes: Vec<usize>,
    coeffs: Vec<f64>,
}

impl ChebFitND {
    pub fn fit(
        f: impl Fn(&[f64]) -> f64,
        domain: &BoxDomain,
        nodes: &[usize],
    ) -> Result<Self> {
        if nodes.len() != domain.dim() {
            return Err(Error::DimensionMismatch { expected: domain.dim(), got: nodes.len() });
        }
        if nodes.iter().any(|&n| n < 2) {
            return Err(Error::InvalidArgument("interpolation needs at least 2 nodes".into()));
        }
        let dim = domain.dim();
        let total: usize = nodes.iter().product();

        // Sample f on the tensor grid of Chebyshev points.
        let mut values = vec![0.0; total];
        let mut point = vec![0.0; dim];
        for (idx, slot) in values.iter_mut().enumerate() {
            let mut rest = idx;
            for ax in (0..dim).rev() {
                let i = rest % nodes[ax];
                rest /= nodes[ax];
                let (lo, hi) = domain.side(ax);
                point[ax] = 0.5 * (lo + hi) + 0.5 * (hi - lo) * cheb_angle(i, nodes[ax]).cos();
            }
            *slot = f(&point);
            if !slot.is_finite() {
                return Err(Error::NonFiniteParam("target sample"));
            }
        }

        // Cosine-transform one axis at a time (values → coefficients).
        let mut data = values;
        let mut scratch = vec![0.0; total];
        for ax in (0..dim).rev() {
            let n = nodes[ax];
            let inner: usize = nodes[ax + 1..].iter().product();
            let outer = total / (n * inner);
            for o in 0..outer {
                for r in 0..inner {
                    let base = o * n * inner + r;
                    for k in 0..n {
                        let mut sum = 0.0;
                        for i in 0..n {
                            sum += data[base + i * inner] * (k as f64 * cheb_angle(i, n)).cos();
                        }
                        scratch[base + k * inner] =
                            if k == 0 { sum / n as f64 } else { 2.0 * sum / n as f64 };
                    }
                }
            }
            std::mem::swap(&mut data, &mut scratch);
        }
        Ok(ChebFitND { domain: domain.clone(), nodes: nodes.to_vec(), coeffs: data })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, multi: &[usize]) -> f64 {
        debug_assert_eq!(multi.len(), self.nodes.len());
        let mut idx = 0;
        for (ax, &k) in multi.iter().enumerate() {
            idx = idx * self.nodes[ax] + k;
        }
        self.coeffs[idx]
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let t: Vec<f64> = (0..self.domain.dim())
            .map(|ax| {
                let (lo, hi) = self.domain.side(ax);
                (2.0 * x[ax] - lo - hi) / (hi - lo)
            })
            .collect();
        self.eval_rec(&self.coeffs, 0, &t)
    }

    fn eval_rec(&self, slice: &[f64], axis: usize, t: &[f64]) -> f64 {
        let n = self.nodes[axis];
        if axis + 1 == self.nodes.len() {
            return clenshaw(slice, t[axis]);
        }
        let inner = slice.len() / n;
        let line: Vec<f64> = (0..n)
            .map(|k| self.eval_rec(&slice[k * inner..(k + 1) * inner], axis + 1, t))
            .collect();
        clenshaw(&line, t[axis])
    }

    /// All terms with |coefficient| above `threshold`, as (multi-index,
    /// coefficient) pairs in row-major order, together with the sup-norm
    /// bound Σ|dropped| of everything below the threshold (valid because
    /// |T_k| ≤ 1 on the reference box).
    pub fn terms(&self, threshold: f64) -> (Vec<(Vec<usize>, f64)>, f64) {
        let dim = self.nodes.len();
        let mut kept = Vec::new();
        let mut dropped = 0.0;
        for (idx, &a) in self.coeffs.iter().enumerate() {
            if a.abs() > threshold {
                let mut multi = vec![0usize; dim];
                let mut rest = idx;
                for ax in (0..dim).rev() {
                    multi[ax] = rest % self.nodes[ax];
                    rest /= self.nodes[ax];
                }
                kept.push((multi, a));
            } else {
                dropped += a.abs();
            }
        }
        (kept, dropped)
    }
}

/// Adaptive tensor fit: the same node count per axis, doubled until the
/// sampled sup error on a uniform probe grid reaches `target`.
pub fn fit_adaptive_nd(
    f: impl Fn(&[f64]) -> f64,
    domain: &BoxDomain,
    target: f64,
    max_degree: usize,
    probe_per_axis: usize,
) -> Result<(ChebFitND, f64)> {
    if !(target.is_finite() && target > 0.0) {
        return Err(Error::NonFiniteParam("fit target"));
    }
    let probe = probe_per_axis.max(3);
    let mut best: Option<(ChebFitND, f64)> = None;
    for &n in NODE_LADDER.iter().filter(|&&n| n <= max_degree + 1) {
        let nodes = vec![n; domain.dim()];
        let fit = ChebFitND::fit(&f, domain, &nodes)?;
        let mut sup = 0.0_f64;
        for point in domain.grid(probe) {
            sup = sup.max((f(&point) - fit.eval(&point)).abs());
        }
        if sup <= target {
            return Ok((fit, sup));
        }
        if best.as_ref().map_or(true, |(_, b)| sup < *b) {
            best = Some((fit, sup));
        }
    }
    let achieved = best.map(|(_, s)| s).unwrap_or(f64::INFINITY);
    Err(Error::DegreeBudget { achieved, needed: target, cap: max_degree })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bessel function of the first kind by its power series — independent
    /// of the interpolation code.
    fn bessel_j(order: usize, z: f64) -> f64 {
        let mut sum = 0.0;
        for m in 0..40 {
            let mut term = if m % 2 == 0 { 1.0 } else { -1.0 };
            term *= (z / 2.0).powi((2 * m + order) as i32);
            for q in 1..=m {
                term /= q as f64;
            }
            for q in 1..=(m + order) {
                term /= q as f64;
            }
            sum += term;
        }
        sum
    }

    #[test]
    fn cubic_reproduces_its_chebyshev_form() {
        // x³ = (3 T₁ + T₃)/4 on [−1, 1].
        let fit = ChebFit1D::fit(|x| x * x * x, -1.0, 1.0, 5).unwrap();
        let a = fit.coeffs();
        assert!((a[0]).abs() < 1e-15);
        assert!((a[1] - 0.75).abs() < 1e-14);
        assert!((a[2]).abs() < 1e-15);
        assert!((a[3] - 0.25).abs() < 1e-14);
        for &x in &[-0.9, -0.31, 0.0, 0.5, 1.0] {
            assert!((fit.eval(x) - x * x * x).abs() < 1e-14);
        }
    }

    #[test]
    fn oscillatory_coefficients_match_the_bessel_expansion() {
        // sin(z·t) on [−1,1] has a_{2j+1} = 2(−1)^j J_{2j+1}(z), even
        // coefficients zero.
        let fit = ChebFit1D::fit(|x| (3.0 * x).sin(), -1.0, 1.0, 33).unwrap();
        let a = fit.coeffs();
        for j in 0..5 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let expect = 2.0 * sign * bessel_j(2 * j + 1, 3.0);
            let got = a[2 * j + 1];
            assert!(
                (got - expect).abs() <= 1e-10,
                "a_{}: {got} vs {expect}",
                2 * j + 1
            );
            assert!(a[2 * j].abs() <= 1e-12, "even coefficient a_{} = {}", 2 * j, a[2 * j]);
        }
    }

    #[test]
    fn mapped_intervals_fit_smooth_targets_to_machine_level() {
        let fit = ChebFit1D::fit(f64::exp, 0.0, 2.0, 17).unwrap();
        for i in 0..=40 {
            let x = 0.05 * i as f64;
            assert!((fit.eval(x) - x.exp()).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn adaptive_fit_stops_at_a_modest_degree() {
        let (fit, sup) =
            fit_adaptive_1d(|x| (3.0 * x).sin(), -1.0, 1.0, 1e-6, 64, 513).unwrap();
        assert!(sup <= 1e-6);
        assert!(fit.degree() <= 32, "degree {}", fit.degree());
    }

    #[test]
    fn degree_caps_fail_with_the_best_achieved_error() {
        let runge = |x: f64| 1.0 / (1.0 + 25.0 * x * x);
        match fit_adaptive_1d(runge, -1.0, 1.0, 1e-12, 16, 513) {
            Err(Error::DegreeBudget { achieved, needed, cap }) => {
                assert!(achieved > needed);
                assert_eq!(cap, 16);
            }
            other => panic!("expected DegreeBudget, got {other:?}"),
        }
    }

    #[test]
    fn tensor_fits_factor_separable_targets() {
        let domain = BoxDomain::symmetric(1.0, 2).unwrap();
        let fit2 =
            ChebFitND::fit(|x: &[f64]| x[0].sin() * x[1].cos(), &domain, &[17, 17]).unwrap();
        let fx = ChebFit1D::fit(f64::sin, -1.0, 1.0, 17).unwrap();
        let fy = ChebFit1D::fit(f64::cos, -1.0, 1.0, 17).unwrap();
        for j in 0..6 {
            for k in 0..6 {
                let expect = fx.coeffs()[j] * fy.coeffs()[k];
                let got = fit2.coeff(&[j, k]);
                assert!(
                    (got - expect).abs() <= 1e-12,
                    "a[{j},{k}] = {got} vs {expect}"
                );
            }
        }
        for point in domain.grid(21) {
            let want = point[0].sin() * point[1].cos();
            assert!((fit2.eval(&point) - want).abs() <= 1e-10);
        }
    }

    #[test]
    fn tensor_fit_is_exact_for_bilinear_targets_on_shifted_boxes() {
        let domain = BoxDomain::new(vec![0.0, -2.0], vec![1.0, -1.0]).unwrap();
        let fit = ChebFitND::fit(|x: &[f64]| x[0] * x[1], &domain, &[5, 5]).unwrap();
        for point in domain.grid(13) {
            assert!((fit.eval(&point) - point[0] * point[1]).abs() <= 1e-13);
        }
        // Only four terms survive: 1, T₁(x), T₁(y), T₁(x)T₁(y).
        let (terms, dropped) = fit.terms(1e-12);
        assert_eq!(terms.len(), 4);
        assert!(dropped <= 1e-10);
        assert!(terms.iter().any(|(m, _)| m == &vec![1, 1]));
    }

    #[test]
    fn adaptive_tensor_fit_reaches_the_target() {
        let domain = BoxDomain::symmetric(1.0, 2).unwrap();
        let (fit, sup) = fit_adaptive_nd(
            |x: &[f64]| x[0].sin() * x[1].cos(),
            &domain,
            1e-8,
            64,
            41,
        )
        .unwrap();
        assert!(sup <= 1e-8);
        assert!(fit.nodes().iter().all(|&n| n <= 33));
    }
}
