//! Error type shared across the crate.

use thiserror::Error;

use crate::constructive::Certificate;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A network or layer was assembled with inconsistent shapes.
    #[error("invalid network structure: {0}")]
    Structure(String),

    /// Evaluation input has the wrong dimension.
    #[error("input dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Evaluation input contains NaN or infinity.
    #[error("evaluation input contains a non-finite coordinate")]
    NonFiniteInput,

    /// A hidden pre-activation or activation overflowed. Layers are 1-based.
    #[error("non-finite value in hidden layer {layer}, neuron {neuron}")]
    NonFiniteEval { layer: usize, neuron: usize },

    /// The output neuron produced NaN or infinity.
    #[error("non-finite value at the output neuron")]
    NonFiniteOutput,

    /// A parameter passed to a structural operation is NaN or infinite.
    #[error("non-finite parameter for {0}")]
    NonFiniteParam(&'static str),

    /// Depth padding can only add layers, never remove them.
    #[error("target depth {target} is below the current depth {current}")]
    PadBelowDepth { target: usize, current: usize },

    /// Structural operations require both operands to share the activation.
    #[error("activation mismatch: {left} vs {right}")]
    ActivationMismatch { left: String, right: String },

    /// Shallow composition needs an outer network with exactly one hidden layer.
    #[error("outer network must have exactly one hidden layer, found depth {0}")]
    OuterDepth(usize),

    /// Shallow composition needs an outer network without a direct output term.
    #[error("composition requires the outer output input-weight c = 0, found {0}")]
    OuterOutputSkip(f64),

    /// The network has nonzero input connections beyond the first layer.
    #[error("not a standard MLP: nonzero direct input connections at {0}")]
    NotStandardMlp(String),

    /// Quadrature over the smoothing kernel needs at least two nodes.
    #[error("smoothing quadrature needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),

    /// The quadrature weights fail to sum to 1 within tolerance.
    #[error("smoothing quadrature mass {0} deviates from 1 by more than 1e-6")]
    BadQuadratureMass(f64),

    /// No scan point had a usable second difference.
    #[error(
        "no curvature above the floor {floor:.3e} on the scan window \
         (largest |second difference| was {max_found:.3e})"
    )]
    CurvatureNotFound { max_found: f64, floor: f64 },

    /// A construction stage measured a larger error than its budget allows.
    #[error("stage budget exceeded: measured sup error {measured:.3e} > budget {budget:.3e}")]
    StageBudgetExceeded { measured: f64, budget: f64 },

    /// An operand exceeds the certified range of the square approximator.
    #[error("operand range {needed:.4} exceeds the certified square range {available:.4}")]
    RangeOverflow { needed: f64, available: f64 },

    /// Approximation requires a nonlinear activation: with an affine
    /// activation every network collapses to an affine function.
    #[error("activation '{0}' is affine, so every network it builds is affine; \
             approximation of a non-affine target requires a nonlinear activation")]
    AffineActivation(String),

    /// The pipeline ran out of budget before reaching the tolerance.
    #[error("budget exhausted: best achieved sup error {achieved:.3e} > tolerance {tol:.3e}")]
    BudgetExhausted {
        achieved: f64,
        tol: f64,
        certificate: Box<Certificate>,
    },

    /// The fitted polynomial would need a degree above the configured cap.
    #[error("polynomial degree budget exhausted: sampled error {achieved:.3e} > {needed:.3e} at the degree cap {cap}")]
    DegreeBudget { achieved: f64, needed: f64, cap: usize },

    /// Training needs an activation with a derivative.
    #[error("activation '{0}' has no derivative; gradients are unavailable")]
    MissingDerivative(String),

    /// The loss became non-finite.
    #[error("training diverged at step {0}: non-finite loss")]
    Divergence(usize),

    /// A model file failed validation; the path names the offending field.
    #[error("model field {path}: {msg}")]
    ModelField { path: String, msg: String },

    /// The model file declares an unknown format version.
    #[error("unsupported model format version {0}")]
    FormatVersion(i64),

    /// Custom activations cannot be written to a model file.
    #[error("activation '{0}' cannot be serialized")]
    UnserializableActivation(String),

    /// A CSV table could not be parsed. Lines are 1-based.
    #[error("malformed table at line {line}: {msg}")]
    Table { line: usize, msg: String },

    /// A user-supplied argument is invalid (bad domain, tolerance, flag...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
