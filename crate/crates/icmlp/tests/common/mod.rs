//! Helpers shared by the integration tests.
//!
//! The plain-MLP oracle here is written from scratch on purpose — its own
//! forward pass, its own backprop, its own activation code — so that tests
//! comparing the library's embedded networks against it are comparing two
//! independent implementations, not one implementation with itself.

#![allow(dead_code)]

use icmlp::net::VectorNet;
use icmlp::rng::SplitMix64;

/// Relative tolerance for gradient agreement.
pub const GRAD_REL: f64 = 1e-5;
/// Absolute floor under which gradient disagreement is ignored.
pub const GRAD_ABS: f64 = 1e-8;

/// Normalized disagreement between two values: `deviation(a, b) <= GRAD_REL`
/// exactly when `|a - b| <= GRAD_ABS + GRAD_REL * max(|a|, |b|)`.
pub fn deviation(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs().max(b.abs()) + GRAD_ABS / GRAD_REL)
}

/// Largest pairwise [`deviation`] between two equally long slices.
pub fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "comparing gradients of different shapes");
    a.iter().zip(b).map(|(x, y)| deviation(*x, *y)).fold(0.0, f64::max)
}

/// Central-difference gradient of `net(x)` with respect to every stored
/// parameter, in the canonical flat order.
pub fn fd_flat_gradient(net: &VectorNet, x: &[f64]) -> Vec<f64> {
    let params = net.flat_params();
    let mut grad = Vec::with_capacity(params.len());
    let mut bumped = params.clone();
    for i in 0..params.len() {
        let h = 1e-6 * (1.0 + params[i].abs());
        bumped[i] = params[i] + h;
        let up = net.with_flat_params(&bumped).unwrap().eval(x).unwrap();
        bumped[i] = params[i] - h;
        let down = net.with_flat_params(&bumped).unwrap().eval(x).unwrap();
        bumped[i] = params[i];
        grad.push((up - down) / (2.0 * h));
    }
    grad
}

/// A feedforward MLP with no input skips, stored the classical way:
/// per layer, neuron-major dense weights into the previous layer (the raw
/// input for the first layer) and biases, then a linear read-out.
#[derive(Debug, Clone)]
pub struct PlainMlp {
    pub input_dim: usize,
    /// `(weights, bias)` per hidden layer; `weights[j * prev + i]`.
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
    pub out_weights: Vec<f64>,
    pub out_bias: f64,
}

/// Activation for the oracle: value and derivative, implemented locally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PlainAct {
    Tanh,
    Sigmoid,
    Softplus,
    Relu,
}

impl PlainAct {
    pub fn value(self, t: f64) -> f64 {
        match self {
            PlainAct::Tanh => {
                // tanh via the exp identity, not f64::tanh.
                let e = (-2.0 * t.abs()).exp();
                let m = (1.0 - e) / (1.0 + e);
                if t < 0.0 {
                    -m
                } else {
                    m
                }
            }
            PlainAct::Sigmoid => {
                if t >= 0.0 {
                    1.0 / (1.0 + (-t).exp())
                } else {
                    let e = t.exp();
                    e / (1.0 + e)
                }
            }
            PlainAct::Softplus => {
                if t > 0.0 {
                    t + (1.0 + (-t).exp()).ln()
                } else {
                    (1.0 + t.exp()).ln()
                }
            }
            PlainAct::Relu => {
                if t > 0.0 {
                    t
                } else {
                    0.0
                }
            }
        }
    }

    pub fn slope(self, t: f64) -> f64 {
        match self {
            PlainAct::Tanh => {
                let y = self.value(t);
                1.0 - y * y
            }
            PlainAct::Sigmoid => {
                let y = self.value(t);
                y * (1.0 - y)
            }
            PlainAct::Softplus => PlainAct::Sigmoid.value(t),
            PlainAct::Relu => {
                if t > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Gradients of a [`PlainMlp`] output, shaped like the parameters.
#[derive(Debug, Clone)]
pub struct PlainGrads {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
    pub out_weights: Vec<f64>,
    pub out_bias: f64,
}

impl PlainMlp {
    pub fn forward(&self, act: PlainAct, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.input_dim);
        let mut h = x.to_vec();
        for (weights, bias) in &self.layers {
            let prev = h.len();
            let width = bias.len();
            let mut next = Vec::with_capacity(width);
            for j in 0..width {
                let mut pre = bias[j];
                for (i, hi) in h.iter().enumerate() {
                    pre += weights[j * prev + i] * hi;
                }
                next.push(act.value(pre));
            }
            h = next;
        }
        let mut y = self.out_bias;
        for (v, hj) in self.out_weights.iter().zip(&h) {
            y += v * hj;
        }
        y
    }

    /// Forward pass plus reverse-mode gradients of the scalar output.
    pub fn forward_backward(&self, act: PlainAct, x: &[f64]) -> (f64, PlainGrads) {
        assert_eq!(x.len(), self.input_dim);
        // Forward, remembering pre-activations and activations per layer.
        let mut values: Vec<Vec<f64>> = vec![x.to_vec()];
        let mut pres: Vec<Vec<f64>> = Vec::new();
        for (weights, bias) in &self.layers {
            let h = values.last().unwrap();
            let prev = h.len();
            let width = bias.len();
            let mut pre = Vec::with_capacity(width);
            for j in 0..width {
                let mut p = bias[j];
                for (i, hi) in h.iter().enumerate() {
                    p += weights[j * prev + i] * hi;
                }
                pre.push(p);
            }
            values.push(pre.iter().map(|&p| act.value(p)).collect());
            pres.push(pre);
        }
        let top = values.last().unwrap();
        let mut y = self.out_bias;
        for (v, hj) in self.out_weights.iter().zip(top) {
            y += v * hj;
        }

        // Reverse pass.
        let out_weights = top.clone();
        let out_bias = 1.0;
        let mut adj: Vec<f64> = self.out_weights.clone();
        let mut layer_grads: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); self.layers.len()];
        for l in (0..self.layers.len()).rev() {
            let (weights, bias) = &self.layers[l];
            let width = bias.len();
            let below = &values[l];
            let prev = below.len();
            let gated: Vec<f64> =
                (0..width).map(|j| adj[j] * act.slope(pres[l][j])).collect();
            let mut dw = vec![0.0; width * prev];
            for j in 0..width {
                for (i, hi) in below.iter().enumerate() {
                    dw[j * prev + i] = gated[j] * hi;
                }
            }
            layer_grads[l] = (dw, gated.clone());
            if l > 0 {
                let mut down = vec![0.0; prev];
                for j in 0..width {
                    for (i, slot) in down.iter_mut().enumerate() {
                        *slot += gated[j] * weights[j * prev + i];
                    }
                }
                adj = down;
            }
        }
        (y, PlainGrads { layers: layer_grads, out_weights, out_bias })
    }
}

/// A random plain MLP with the given shape, parameters uniform in (−1, 1)
/// scaled by `1/sqrt(fan_in)`.
pub fn random_plain_mlp(rng: &mut SplitMix64, input_dim: usize, widths: &[usize]) -> PlainMlp {
    let mut layers = Vec::with_capacity(widths.len());
    let mut prev = input_dim;
    for &width in widths {
        let s = 1.0 / (prev as f64).sqrt();
        let weights = (0..width * prev).map(|_| rng.uniform_symmetric(s)).collect();
        let bias = (0..width).map(|_| rng.uniform_symmetric(s)).collect();
        layers.push((weights, bias));
        prev = width;
    }
    let s = 1.0 / (prev as f64).sqrt();
    let out_weights = (0..prev).map(|_| rng.uniform_symmetric(s)).collect();
    let out_bias = rng.uniform_symmetric(s);
    PlainMlp { input_dim, layers, out_weights, out_bias }
}

/// Path of the compiled command-line binary.
pub fn cli_bin() -> &'static str {
    env!("CARGO_BIN_EXE_icmlp")
}

/// A fresh scratch directory, removed when the handle drops.
pub fn scratch_dir(tag: &str) -> tempfile::TempDir {
    tempfile::Builder::new()
        .prefix(&format!("icmlp-{tag}-"))
        .tempdir()
        .expect("create scratch dir")
}
