//! Input-connected multilayer perceptrons (IC-MLPs).
//!
//! An IC-MLP is a feedforward network in which every hidden neuron receives,
//! in addition to the usual connections from the previous layer, a direct
//! affine connection from the raw input, and the output neuron adds its own
//! affine term in the input. For a scalar input `x` the hidden recursion is
//!
//! ```text
//! h[l][j] = act( sum_i w[l][j][i] * h[l-1][i] + a[l][j] * x + b[l][j] )
//! ```
//!
//! and the output is `sum_j v[j] * h[L][j] + c * x + d`. Vector inputs replace
//! the products `a[l][j] * x` and `c * x` by inner products. A depth-0 network
//! has no hidden layers and computes the affine map `c · x + d` alone.
//!
//! The crate provides:
//!
//! * [`net`] — network types and evaluation ([`ScalarNet`], [`VectorNet`]);
//! * [`algebra`] — structure-preserving operations: depth padding, linear
//!   combination, affine input reparameterization, shallow composition, and
//!   the embedding of ordinary MLPs;
//! * [`constructive`] — certified function approximation: square
//!   approximators built from smoothed activations, product and polynomial
//!   networks, and an end-to-end pipeline with measured error certificates;
//! * [`train`] — reverse-mode gradients and deterministic mini-batch fitting;
//! * [`modelio`] — a versioned text model format and CSV export;
//! * [`verify`] — seeded self-check suites used by the command-line tool.

pub mod activation;
pub mod algebra;
pub mod cli;
pub mod constructive;
pub mod domain;
pub mod error;
pub mod modelio;
pub mod net;
pub mod rng;
pub mod train;
pub mod verify;

pub use activation::Activation;
pub use domain::BoxDomain;
pub use error::{Error, Result};
pub use net::{ScalarNet, Trace, VectorNet};
