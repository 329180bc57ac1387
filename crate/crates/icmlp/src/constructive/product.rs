//! Products, monomials, and polynomials from a certified square.
//!
//! Everything here reduces to the polarization identity
//! `u·v = ½[(u+v)² − u² − v²]` applied with a square approximator `P`:
//! three applications of `P` cost error at most `3·½·e_P = 1.5·e_P`,
//! provided all three arguments stay inside P's certified range (checked by
//! dense sampling with a 10% margin).
//!
//! [`product_net`] builds the identity *fused*: the operands are merged
//! block-diagonally once and the three P copies read `u+v`, `u`, and `v` as
//! three affine functionals of the same shared hidden state. This computes
//! bit-for-bit the same values as literally combining three
//! `compose_shallow` results while storing one copy of each operand instead
//! of two (the unit tests pin that equivalence).

use std::collections::HashMap;

use crate::algebra::{compose_shallow, pad_depth};
use crate::constructive::square::SquareApprox;
use crate::constructive::Budget;
use crate::domain::{sup_abs_diff, sup_against, BoxDomain};
use crate::error::{Error, Result};
use crate::net::{HiddenLayer, Output, Row, VectorNet};

/// One polynomial term `coeff · Π_i x_i^{exponents[i]}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyTerm {
    pub exponents: Vec<usize>,
    pub coeff: f64,
}

impl PolyTerm {
    pub fn new(exponents: Vec<usize>, coeff: f64) -> Self {
        PolyTerm { exponents, coeff }
    }

    pub fn total_degree(&self) -> usize {
        self.exponents.iter().sum()
    }
}

/// A constructed network together with its accumulated error bound against
/// the exact target it realizes.
#[derive(Debug, Clone)]
pub struct Realized {
    pub net: VectorNet,
    /// sup |net − target| ≤ bound on the construction domain.
    pub bound: f64,
}

/// Density used when sampling a network to estimate its value range.
fn range_sample_density(dim: usize) -> usize {
    match dim {
        0 | 1 => 513,
        2 => 65,
        3 => 17,
        _ => 9,
    }
}

/// Largest |net| over a sample grid of the domain.
fn estimate_max_abs(net: &VectorNet, domain: &BoxDomain, threads: usize) -> Result<f64> {
    let res = sup_against(
        domain,
        range_sample_density(domain.dim()),
        threads,
        &|x: &[f64]| net.eval(x),
        &|_: &[f64]| 0.0,
    )?;
    Ok(res.sup)
}

fn check_range(maxes: &[f64], available: f64) -> Result<()> {
    let needed = maxes.iter().fold(0.0_f64, |acc, &m| acc.max(m)) * 1.1;
    if needed > available {
        return Err(Error::RangeOverflow { needed, available });
    }
    Ok(())
}

/// `P ∘ w`: approximately squares the value of `w`.
///
/// The range of `w` is estimated by dense sampling; with the 10% safety
/// margin it must fit inside the square's certified range. The certified
/// error of the result against `w²` is `sq.sup_error`.
pub fn square_net(
    sq: &SquareApprox,
    w: &VectorNet,
    domain: &BoxDomain,
    threads: usize,
) -> Result<VectorNet> {
    check_range(&[estimate_max_abs(w, domain, threads)?], sq.range)?;
    compose_shallow(&sq.net, w)
}

/// Merge two equal-depth networks into one block-diagonal hidden stack.
/// Both blocks' output functionals remain readable from the merged state.
fn block_merge(a: &VectorNet, b: &VectorNet) -> Vec<HiddenLayer> {
    let mut layers = Vec::with_capacity(a.depth());
    let mut prev_a = 0usize;
    for (la, lb) in a.layers().iter().zip(b.layers()) {
        let mut rows: Vec<Row> = la.rows().to_vec();
        for r in lb.rows() {
            rows.push(if r.weights().is_empty() {
                Row::empty()
            } else {
                Row::new(prev_a + r.offset(), r.weights().to_vec())
            });
        }
        let mut input = la.input.clone();
        input.extend_from_slice(&lb.input);
        let mut bias = la.bias().to_vec();
        bias.extend_from_slice(lb.bias());
        layers.push(HiddenLayer::new(rows, input, bias));
        prev_a = la.width();
    }
    layers
}

/// An affine read-out of a hidden state: `⟨v, h⟩ + ⟨c, x⟩ + d`.
struct Functional {
    v: Vec<f64>,
    c: Vec<f64>,
    d: f64,
}

/// `≈ u·v` by the polarization identity, with `u` and `v` stored once.
///
/// The three square blocks read the functionals of `u+v`, `u`, and `v` off
/// the shared merged state; the output weighs them `+½, −½, −½`. Error
/// against the exact product of what `u` and `v` compute: `1.5·sq.sup_error`
/// (three half-weighted squares), provided the sampled ranges of `u`, `v`,
/// and `u+v` fit the square's range with 10% margin.
pub fn product_net(
    sq: &SquareApprox,
    u: &VectorNet,
    v: &VectorNet,
    domain: &BoxDomain,
    threads: usize,
) -> Result<VectorNet> {
    if u.input_dim() != v.input_dim() || u.input_dim() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: u.input_dim().max(v.input_dim()) });
    }
    if u.activation() != v.activation() {
        return Err(Error::ActivationMismatch {
            left: u.activation().name().to_string(),
            right: v.activation().name().to_string(),
        });
    }
    if sq.net.activation() != u.activation() {
        return Err(Error::ActivationMismatch {
            left: sq.net.activation().name().to_string(),
            right: u.activation().name().to_string(),
        });
    }
    let p_vec = sq.net.as_vector();
    if p_vec.depth() != 1 {
        return Err(Error::OuterDepth(p_vec.depth()));
    }
    let c_p = p_vec.output().input_weights()[0];
    if c_p != 0.0 {
        return Err(Error::OuterOutputSkip(c_p));
    }

    // Range checks on u, v, and u+v.
    let max_u = estimate_max_abs(u, domain, threads)?;
    let max_v = estimate_max_abs(v, domain, threads)?;
    let sum_res = sup_abs_diff(
        domain,
        range_sample_density(domain.dim()),
        threads,
        &|x: &[f64]| Ok(u.eval(x)? + v.eval(x)?),
        &|_: &[f64]| Ok(0.0),
    )?;
    check_range(&[max_u, max_v, sum_res.sup], sq.range)?;

    // Shared hidden state.
    let depth = u.depth().max(v.depth());
    let pu = pad_depth(u, depth)?;
    let pv = pad_depth(v, depth)?;
    let mut layers = block_merge(&pu, &pv);
    let mu = pu.output().weights().len();
    let n = u.input_dim();

    // The three functionals the square blocks will read. u+v concatenates
    // both blocks' output weights and sums the direct parts.
    let f_sum = Functional {
        v: pu
            .output()
            .weights()
            .iter()
            .chain(pv.output().weights())
            .copied()
            .collect(),
        c: (0..n)
            .map(|i| pu.output().input_weights()[i] + pv.output().input_weights()[i])
            .collect(),
        d: pu.output().bias() + pv.output().bias(),
    };
    let f_u = Functional {
        v: {
            let mut w = pu.output().weights().to_vec();
            w.extend(std::iter::repeat(0.0).take(pv.output().weights().len()));
            w
        },
        c: pu.output().input_weights().to_vec(),
        d: pu.output().bias(),
    };
    let f_v = Functional {
        v: {
            let mut w = vec![0.0; mu];
            w.extend_from_slice(pv.output().weights());
            w
        },
        c: pv.output().input_weights().to_vec(),
        d: pv.output().bias(),
    };

    // One appended layer: three square blocks over the shared state.
    let p_layer = &p_vec.layers()[0];
    let m = p_layer.width();
    let mut rows = Vec::with_capacity(3 * m);
    let mut input = Vec::with_capacity(3 * m * n);
    let mut bias = Vec::with_capacity(3 * m);
    for f in [&f_sum, &f_u, &f_v] {
        for k in 0..m {
            let a_k = p_layer.input[k];
            let dense: Vec<f64> = f.v.iter().map(|w| a_k * w).collect();
            rows.push(Row::from_dense(&dense));
            input.extend(f.c.iter().map(|c| a_k * c));
            bias.push(a_k * f.d + p_layer.bias[k]);
        }
    }
    layers.push(HiddenLayer::new(rows, input, bias));

    let v_p = p_vec.output().weights();
    let mut out_w = Vec::with_capacity(3 * m);
    out_w.extend(v_p.iter().map(|w| 0.5 * w));
    out_w.extend(v_p.iter().map(|w| -0.5 * w));
    out_w.extend(v_p.iter().map(|w| -0.5 * w));
    let output = Output::new(out_w, vec![0.0; n], -0.5 * p_vec.output().bias());
    VectorNet::new(n, layers, output, u.activation())
}

/// `Π_i x_i^{e_i}` as a network, with an accumulated error bound.
///
/// Exponent zero everywhere gives the exact constant-1 network; total
/// degree one gives an exact coordinate projection. Higher powers use
/// binary exponentiation through [`square_net`] / [`product_net`], and the
/// bound tracks `|ŵ₁ŵ₂ − t₁t₂| ≤ e_prod + B₁·M₂ + B₂·(M₁ + B₁)` through
/// every step (`M` = sup of the exact target, `B` = accumulated bound).
pub fn monomial_net(
    exponents: &[usize],
    domain: &BoxDomain,
    sq: &SquareApprox,
    budget: &Budget,
    threads: usize,
) -> Result<Realized> {
    if exponents.len() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: exponents.len() });
    }
    let total: usize = exponents.iter().sum();
    if total > budget.max_degree {
        return Err(Error::DegreeBudget {
            achieved: total as f64,
            needed: budget.max_degree as f64,
            cap: budget.max_degree,
        });
    }
    let act = sq.net.activation();
    let n = domain.dim();

    if total == 0 {
        let net = VectorNet::affine_with_activation(vec![0.0; n], 1.0, act)?;
        return Ok(Realized { net, bound: 0.0 });
    }

    // Exact coordinate radius per axis: sup |x_i| on the box.
    let radius: Vec<f64> = (0..n)
        .map(|i| {
            let (lo, hi) = domain.side(i);
            lo.abs().max(hi.abs())
        })
        .collect();
    let coord = |axis: usize| -> Result<VectorNet> {
        let mut c = vec![0.0; n];
        c[axis] = 1.0;
        VectorNet::affine_with_activation(c, 0.0, act)
    };

    // (net, bound, target sup) for x_axis^e, memoized per axis/exponent.
    struct Pow {
        net: VectorNet,
        bound: f64,
        sup: f64,
    }
    let mut memo: HashMap<(usize, usize), Pow> = HashMap::new();

    fn pow_axis(
        axis: usize,
        e: usize,
        coord: &dyn Fn(usize) -> Result<VectorNet>,
        radius: &[f64],
        sq: &SquareApprox,
        domain: &BoxDomain,
        threads: usize,
        memo: &mut HashMap<(usize, usize), Pow>,
    ) -> Result<Pow> {
        if let Some(p) = memo.get(&(axis, e)) {
            return Ok(Pow { net: p.net.clone(), bound: p.bound, sup: p.sup });
        }
        let result = if e == 1 {
            Pow { net: coord(axis)?, bound: 0.0, sup: radius[axis] }
        } else if e % 2 == 0 {
            let half = pow_axis(axis, e / 2, coord, radius, sq, domain, threads, memo)?;
            let net = square_net(sq, &half.net, domain, threads)?;
            let bound = sq.sup_error + half.bound * (2.0 * half.sup + half.bound);
            Pow { net, bound, sup: half.sup * half.sup }
        } else {
            let left = pow_axis(axis, e - 1, coord, radius, sq, domain, threads, memo)?;
            let right = pow_axis(axis, 1, coord, radius, sq, domain, threads, memo)?;
            let net = product_net(sq, &left.net, &right.net, domain, threads)?;
            let bound = 1.5 * sq.sup_error
                + left.bound * right.sup
                + right.bound * (left.sup + left.bound);
            Pow { net, bound, sup: left.sup * right.sup }
        };
        memo.insert(
            (axis, e),
            Pow { net: result.net.clone(), bound: result.bound, sup: result.sup },
        );
        Ok(result)
    }

    // Per-axis powers, then a left fold of cross-axis products.
    let mut acc: Option<Pow> = None;
    for (axis, &e) in exponents.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let p = pow_axis(axis, e, &coord, &radius, sq, domain, threads, &mut memo)?;
        acc = Some(match acc {
            None => p,
            Some(prev) => {
                let net = product_net(sq, &prev.net, &p.net, domain, threads)?;
                let bound = 1.5 * sq.sup_error
                    + prev.bound * p.sup
                    + p.bound * (prev.sup + prev.bound);
                Pow { net, bound, sup: prev.sup * p.sup }
            }
        });
    }
    let result = acc.expect("total degree > 0 guarantees at least one factor");
    Ok(Realized { net: result.net, bound: result.bound })
}

/// `Σ terms` as a network with a running error ledger.
///
/// Terms of total degree ≤ 1 are folded exactly into the output's direct
/// connections; every nonlinear term goes through [`monomial_net`] and is
/// weighed in with [`crate::algebra::linear_combine`]. The total bound
/// `Σ |coeff|·bound_term` must fit `stage_budget`.
pub fn polynomial_net(
    terms: &[PolyTerm],
    domain: &BoxDomain,
    sq: &SquareApprox,
    budget: &Budget,
    stage_budget: f64,
    threads: usize,
) -> Result<Realized> {
    if !(stage_budget.is_finite() && stage_budget > 0.0) {
        return Err(Error::NonFiniteParam("stage budget"));
    }
    let n = domain.dim();
    let act = sq.net.activation();
    let mut c_affine = vec![0.0; n];
    let mut d_affine = 0.0;
    let mut built: Vec<VectorNet> = Vec::new();
    let mut coeffs: Vec<f64> = Vec::new();
    let mut total_bound = 0.0;

    for term in terms {
        if term.exponents.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: term.exponents.len() });
        }
        if !term.coeff.is_finite() {
            return Err(Error::NonFiniteParam("polynomial coefficient"));
        }
        match term.total_degree() {
            0 => d_affine += term.coeff,
            1 => {
                let axis = term.exponents.iter().position(|&e| e == 1).unwrap();
                c_affine[axis] += term.coeff;
            }
            _ => {
                let mono = monomial_net(&term.exponents, domain, sq, budget, threads)?;
                total_bound += term.coeff.abs() * mono.bound;
                built.push(mono.net);
                coeffs.push(term.coeff);
            }
        }
    }
    if total_bound > stage_budget {
        return Err(Error::StageBudgetExceeded { measured: total_bound, budget: stage_budget });
    }

    let net = if built.is_empty() {
        VectorNet::affine_with_activation(c_affine.clone(), d_affine, act)?
    } else {
        let refs: Vec<&VectorNet> = built.iter().collect();
        let mut combined = crate::algebra::linear_combine(&refs, &coeffs)?;
        for (slot, add) in combined.output.input.iter_mut().zip(&c_affine) {
            *slot += add;
        }
        combined.output.bias += d_affine;
        combined
    };
    // Affine folding never goes through σ; make sure the result is intact.
    net.validate()?;
    Ok(Realized { net, bound: total_bound })
}
