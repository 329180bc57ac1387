//! Scalar activation functions.
//!
//! Every built-in activation returns a finite value for every finite input:
//! `softplus` and `sigmoid` use overflow-free formulations, `tanh` and `relu`
//! are bounded by their argument, and the affine activations are exact. This
//! is what lets network evaluation promise finite hidden states for finite
//! inputs and parameters.

/// A named scalar activation.
///
/// `Affine { slope, intercept }` and `Identity` are *affine* activations: a
/// network built on them computes an affine function of its input regardless
/// of depth or width. [`Activation::affine_coeffs`] exposes the `(A, B)` of
/// `t ↦ A·t + B` for these, and `None` for the genuinely nonlinear ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    /// `max(t, 0)`.
    Relu,
    Tanh,
    /// Logistic function `1 / (1 + exp(-t))`, evaluated overflow-free.
    Sigmoid,
    /// `ln(1 + exp(t))`, evaluated as `max(t, 0) + ln_1p(exp(-|t|))`.
    Softplus,
    /// `t` itself; affine with `(A, B) = (1, 0)`.
    Identity,
    /// `slope * t + intercept`.
    Affine { slope: f64, intercept: f64 },
    /// An externally supplied activation; see [`CustomActivation`].
    Custom(&'static CustomActivation),
}

/// A user-defined activation. The derivative is optional; training rejects
/// activations without one.
#[derive(Debug)]
pub struct CustomActivation {
    pub name: &'static str,
    pub eval: fn(f64) -> f64,
    pub deriv: Option<fn(f64) -> f64>,
    /// `Some((a, b))` when the function is exactly `t ↦ a·t + b`.
    pub affine: Option<(f64, f64)>,
}

/// Custom activations are identified by name (function pointers have no
/// meaningful equality).
impl PartialEq for CustomActivation {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.affine == other.affine
    }
}

impl Activation {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Activation::Relu => t.max(0.0),
            Activation::Tanh => t.tanh(),
            Activation::Sigmoid => sigmoid(t),
            Activation::Softplus => t.max(0.0) + (-t.abs()).exp().ln_1p(),
            Activation::Identity => t,
            Activation::Affine { slope, intercept } => slope * t + intercept,
            Activation::Custom(c) => (c.eval)(t),
        }
    }

    /// Pointwise derivative, when one is available. `relu` uses 0 at the kink.
    pub fn deriv(&self, t: f64) -> Option<f64> {
        match self {
            Activation::Relu => Some(if t > 0.0 { 1.0 } else { 0.0 }),
            Activation::Tanh => {
                let y = t.tanh();
                Some(1.0 - y * y)
            }
            Activation::Sigmoid => {
                let y = sigmoid(t);
                Some(y * (1.0 - y))
            }
            Activation::Softplus => Some(sigmoid(t)),
            Activation::Identity => Some(1.0),
            Activation::Affine { slope, .. } => Some(*slope),
            Activation::Custom(c) => c.deriv.map(|d| d(t)),
        }
    }

    /// The `(A, B)` of `t ↦ A·t + B` for affine activations, else `None`.
    pub fn affine_coeffs(&self) -> Option<(f64, f64)> {
        match self {
            Activation::Identity => Some((1.0, 0.0)),
            Activation::Affine { slope, intercept } => Some((*slope, *intercept)),
            Activation::Custom(c) => c.affine,
            _ => None,
        }
    }

    pub fn is_affine(&self) -> bool {
        self.affine_coeffs().is_some()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Softplus => "softplus",
            Activation::Identity => "identity",
            Activation::Affine { .. } => "affine",
            Activation::Custom(c) => c.name,
        }
    }

    /// Parse a CLI-style activation name: `relu`, `tanh`, `sigmoid`,
    /// `softplus`, `identity`, or `affine:A,B`.
    pub fn parse(s: &str) -> Option<Activation> {
        match s {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "sigmoid" => Some(Activation::Sigmoid),
            "softplus" => Some(Activation::Softplus),
            "identity" => Some(Activation::Identity),
            _ => {
                let rest = s.strip_prefix("affine:")?;
                let (a, b) = rest.split_once(',')?;
                let slope: f64 = a.trim().parse().ok()?;
                let intercept: f64 = b.trim().parse().ok()?;
                (slope.is_finite() && intercept.is_finite())
                    .then_some(Activation::Affine { slope, intercept })
            }
        }
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}
