//! Constructive approximation: building networks with certified sup-norm
//! error bounds.
//!
//! The pipeline runs in stages, each producing a network plus a measured
//! error contribution:
//!
//! 1. Smooth the activation into a curved scalar profile `S` (a depth-1 net
//!    built from quadrature nodes of a compactly supported bump).
//! 2. Locate a point of nonzero curvature of `S` and turn a scaled symmetric
//!    second difference of `S` into a square approximator `T ≈ x²`.
//! 3. Derive products (`uv = ½[(u+v)² − u² − v²]`), monomials, and
//!    polynomials by composing and combining square approximators.
//! 4. Fit the target with a polynomial (Chebyshev interpolation) and realize
//!    that polynomial as a network.
//!
//! [`approximate`] drives all four stages and returns the network together
//! with a [`Certificate`] recording the measured error and a stagewise
//! [`ErrorLedger`]. Every bound in the certificate is *measured on a dense
//! grid* (and re-checked on a fresh, denser grid); the ledger additionally
//! carries the a-priori bounds the construction maintained along the way.

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::domain::BoxDomain;

mod chebyshev;
mod curvature;
mod mollifier;
mod product;
mod realize;
mod square;

pub use chebyshev::{ChebFit1D, ChebFitND};
pub use curvature::{find_curvature, CurvaturePoint};
pub use mollifier::{build_mollified, MollifierSpec};
pub use product::{monomial_net, polynomial_net, product_net, square_net, PolyTerm, Realized};
pub use realize::approximate;
pub use square::{build_square, certified_square, SquareApprox};
// (submodules are self-contained; each carries its own unit tests)

/// Resource limits for [`approximate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Largest polynomial degree attempted per axis.
    pub max_degree: usize,
    /// Largest quadrature node count used when smoothing the activation.
    pub max_quadrature_nodes: usize,
    /// Densest measurement grid per axis.
    pub max_probe_density: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_degree: 64, max_quadrature_nodes: 20_000, max_probe_density: 4_000 }
    }
}

/// What to approximate: a target function on a box, to a sup-norm tolerance,
/// using networks with a given activation.
pub struct ApproxRequest<'a> {
    /// Target function, evaluated pointwise on domain coordinates.
    pub target: &'a (dyn Fn(&[f64]) -> f64 + Sync),
    pub domain: BoxDomain,
    /// Requested sup-norm tolerance (> 0).
    pub tol: f64,
    /// Activation of the constructed network. Must not be affine.
    pub activation: Activation,
    pub budget: Budget,
    /// Worker threads for grid measurements (results are identical for any
    /// thread count).
    pub threads: usize,
}

impl<'a> ApproxRequest<'a> {
    pub fn new(
        target: &'a (dyn Fn(&[f64]) -> f64 + Sync),
        domain: BoxDomain,
        tol: f64,
        activation: Activation,
    ) -> Self {
        ApproxRequest { target, domain, tol, activation, budget: Budget::default(), threads: 1 }
    }
}

/// Stagewise accounting of where approximation error comes from.
///
/// Entries are nonnegative. `truncation` is the a-priori polynomial-fit
/// bound from adaptive refinement; `truncation_measured` is the fit error
/// actually measured on the probe grid; `square_stage` and `composition`
/// bound the network-realization error of the polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorLedger {
    /// |Σ λ_k − 1| of the bump quadrature used by the square stage.
    pub quadrature_mass_deviation: f64,
    /// Measured sup error of the base square approximator on its range.
    pub square_stage: f64,
    /// Propagated bound for all products/compositions realizing the
    /// polynomial's nonlinear terms.
    pub composition: f64,
    /// Polynomial truncation bound from the fitting stage.
    pub truncation: f64,
    /// Fit error measured on the construction grid.
    pub truncation_measured: f64,
}

impl ErrorLedger {
    pub fn zero() -> Self {
        ErrorLedger {
            quadrature_mass_deviation: 0.0,
            square_stage: 0.0,
            composition: 0.0,
            truncation: 0.0,
            truncation_measured: 0.0,
        }
    }

    /// Total claimed bound: polynomial truncation plus realization error.
    pub fn claimed_bound(&self) -> f64 {
        self.truncation + self.composition
    }
}

/// A measured, grid-based error bound for a constructed network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// The tolerance that was requested.
    pub tolerance: f64,
    /// sup |f − net| measured on the construction grid.
    pub measured_sup_error: f64,
    /// sup |f − net| re-measured on a fresh grid of twice the density.
    pub recheck_sup_error: f64,
    /// The ledger's claimed bound (truncation + realization). This is the
    /// a-priori worst-case accounting, which assumes every stage errs
    /// maximally in the same direction; it routinely exceeds the measured
    /// error and may exceed the tolerance even when the construction
    /// succeeds. Success is decided by the two measured fields above.
    pub certified_bound: f64,
    /// Construction grid density per axis.
    pub grid_per_axis: usize,
    /// Recheck grid density per axis.
    pub recheck_per_axis: usize,
    pub ledger: ErrorLedger,
}
