//! Smoothing the activation into a curved scalar profile.
//!
//! `S(x) = ∫ σ(a(x−y)+b) φ_ε(y) dy` is a C∞ function whenever φ is, and it
//! is nonlinear whenever σ is. Approximating the integral by a midpoint
//! Riemann sum with `m` nodes turns `S` into a width-`m` depth-1 network:
//! neuron `k` computes `σ(a·x + (b − a·y_k))` and contributes with output
//! weight `λ_k = φ_ε(y_k)·Δy`.

use std::sync::OnceLock;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::net::ScalarNet;

/// The standard compactly supported smooth bump on (−1, 1), scaled to unit
/// mass: `φ(t) = Z·exp(−1/(1−t²))` for |t| < 1, zero outside.
pub fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        bump_normalizer() * (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// `φ_ε(y) = φ(y/ε)/ε`, a unit-mass bump supported on (−ε, ε).
pub fn bump_scaled(epsilon: f64, y: f64) -> f64 {
    bump(y / epsilon) / epsilon
}

/// Normalizer Z with ∫φ = 1, computed once by a fine midpoint rule. The
/// integrand is smooth and vanishes with all derivatives at ±1, so the
/// midpoint rule converges faster than any power of the step.
pub(crate) fn bump_normalizer() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| {
        let m = 400_001_usize;
        let dt = 2.0 / m as f64;
        let mut sum = 0.0;
        for k in 0..m {
            let t = -1.0 + (k as f64 + 0.5) * dt;
            sum += (-1.0 / (1.0 - t * t)).exp() * dt;
        }
        1.0 / sum
    })
}

/// Quadrature data defining the smoothed profile `S_{ε,m}` and its network.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifierSpec {
    epsilon: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    slope: f64,
    shift: f64,
}

impl MollifierSpec {
    /// Midpoint nodes `y_k = −ε + (k+½)Δy` (strictly inside (−ε, ε)) with
    /// weights `λ_k = φ_ε(y_k)·Δy`.
    ///
    /// Fails if `m < 2` or if the weights miss unit mass by more than 1e−6
    /// (too few nodes to resolve the bump).
    pub fn new(epsilon: f64, m: usize, slope: f64, shift: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::NonFiniteParam("smoothing width"));
        }
        if m < 2 {
            return Err(Error::TooFewNodes(m));
        }
        if !(slope.is_finite() && slope != 0.0) {
            return Err(Error::NonFiniteParam("probe slope (must be nonzero)"));
        }
        if !shift.is_finite() {
            return Err(Error::NonFiniteParam("probe shift"));
        }
        let dy = 2.0 * epsilon / m as f64;
        let mut nodes = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for k in 0..m {
            let y = -epsilon + (k as f64 + 0.5) * dy;
            nodes.push(y);
            weights.push(bump_scaled(epsilon, y) * dy);
        }
        let mass: f64 = weights.iter().sum();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::BadQuadratureMass(mass));
        }
        Ok(MollifierSpec { epsilon, nodes, weights, slope, shift })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// |Σλ_k − 1|: how far the quadrature weights miss unit mass.
    pub fn mass_deviation(&self) -> f64 {
        let mass: f64 = self.weights.iter().sum();
        (mass - 1.0).abs()
    }
}

/// Realize `S_{ε,m}(x) = Σ_k λ_k σ(a(x−y_k)+b)` as a depth-1 scalar network
/// with no direct input-to-output term (c = 0, d = 0).
pub fn build_mollified(spec: &MollifierSpec, activation: Activation) -> Result<ScalarNet> {
    if spec.node_count() < 2 {
        return Err(Error::TooFewNodes(spec.node_count()));
    }
    let neurons: Vec<(f64, f64, f64)> = spec
        .nodes
        .iter()
        .zip(&spec.weights)
        .map(|(&y, &lambda)| (spec.slope, spec.shift - spec.slope * y, lambda))
        .collect();
    ScalarNet::single_hidden(activation, &neurons, 0.0, 0.0)
}
