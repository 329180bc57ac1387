//! Reverse-mode gradients and a small deterministic trainer.
//!
//! [`backward`] differentiates a network's output with respect to every
//! parameter — including the direct input connections at every depth and the
//! output's direct term, the paths that distinguish this architecture from an
//! ordinary MLP. [`fit`] runs seeded minibatch gradient descent (plain or
//! momentum) on mean squared error. Everything is deterministic: given the
//! same starting network, dataset, and config, the loss trace is
//! bit-identical run to run.

use crate::error::{Error, Result};
use crate::net::{HiddenLayer, Output, Row, VectorNet};
use crate::rng::SplitMix64;

/// Per-parameter partials for one hidden layer, shaped exactly like the
/// layer: `inter[j]` aligns with the layer's `j`-th weight row (same offset
/// and length), `input` is neuron-major over the input dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub inter: Vec<Vec<f64>>,
    pub input: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Partials for the output neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputGrads {
    pub weights: Vec<f64>,
    pub input: Vec<f64>,
    pub bias: f64,
}

/// All partials of `upstream * H(x)` with respect to the parameters, plus
/// the forward value `H(x)` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub layers: Vec<LayerGrads>,
    pub output: OutputGrads,
    pub value: f64,
}

impl GradientBundle {
    /// Flatten every gradient in the same canonical order as
    /// [`VectorNet::flat_params`]: per hidden layer all weight rows, then
    /// the input block, then the biases; finally the output weights, the
    /// output's input weights, and the output bias.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for row in &layer.inter {
                out.extend_from_slice(row);
            }
            out.extend_from_slice(&layer.input);
            out.extend_from_slice(&layer.bias);
        }
        out.extend_from_slice(&self.output.weights);
        out.extend_from_slice(&self.output.input);
        out.push(self.output.bias);
        out
    }

    fn zeros_like(net: &VectorNet) -> Self {
        let n = net.input_dim();
        let layers = net
            .layers()
            .iter()
            .map(|layer| LayerGrads {
                inter: layer.rows().iter().map(|r| vec![0.0; r.weights().len()]).collect(),
                input: vec![0.0; layer.width() * n],
                bias: vec![0.0; layer.width()],
            })
            .collect();
        GradientBundle {
            layers,
            output: OutputGrads {
                weights: vec![0.0; net.output().weights().len()],
                input: vec![0.0; n],
                bias: 0.0,
            },
            value: 0.0,
        }
    }

    fn add_scaled(&mut self, other: &GradientBundle, t: f64) {
        for (l, ol) in self.layers.iter_mut().zip(&other.layers) {
            for (r, or) in l.inter.iter_mut().zip(&ol.inter) {
                for (w, ow) in r.iter_mut().zip(or) {
                    *w += t * ow;
                }
            }
            for (w, ow) in l.input.iter_mut().zip(&ol.input) {
                *w += t * ow;
            }
            for (b, ob) in l.bias.iter_mut().zip(&ol.bias) {
                *b += t * ob;
            }
        }
        for (w, ow) in self.output.weights.iter_mut().zip(&other.output.weights) {
            *w += t * ow;
        }
        for (w, ow) in self.output.input.iter_mut().zip(&other.output.input) {
            *w += t * ow;
        }
        self.output.bias += t * other.output.bias;
    }

    fn scale(&mut self, t: f64) {
        for l in &mut self.layers {
            for r in &mut l.inter {
                for w in r.iter_mut() {
                    *w *= t;
                }
            }
            for w in &mut l.input {
                *w *= t;
            }
            for b in &mut l.bias {
                *b *= t;
            }
        }
        for w in &mut self.output.weights {
            *w *= t;
        }
        for w in &mut self.output.input {
            *w *= t;
        }
        self.output.bias *= t;
    }

    /// Zero the partials of the direct input connections beyond the first
    /// hidden layer and of the output's direct term — the parameters an
    /// ordinary MLP does not have.
    fn mask_input_skips(&mut self) {
        for l in self.layers.iter_mut().skip(1) {
            for w in &mut l.input {
                *w = 0.0;
            }
        }
        for w in &mut self.output.input {
            *w = 0.0;
        }
    }
}

/// Exact reverse-mode partials of `upstream * H(x)` for every parameter.
///
/// The adjoint of hidden value `h[l][j]` collects the output weight (for the
/// last layer) or the inter-layer weights of the next layer; the chain rule
/// through the activation then distributes it onto that neuron's inter-layer
/// weights, its direct input weights, and its bias. Direct input connections
/// receive gradient at every depth.
pub fn backward(net: &VectorNet, x: &[f64], upstream: f64) -> Result<GradientBundle> {
    let deriv_of = |t: f64| -> Result<f64> {
        net.activation()
            .deriv(t)
            .ok_or_else(|| Error::MissingDerivative(net.activation().name().to_string()))
    };
    if !net.layers().is_empty() {
        // Fail fast on underivable activations before doing any work.
        deriv_of(0.0)?;
    }
    let trace = net.eval_trace(x)?;
    let n = net.input_dim();
    let mut grads = GradientBundle::zeros_like(net);
    grads.value = trace.output;

    for (k, xk) in x.iter().enumerate() {
        grads.output.input[k] = upstream * xk;
    }
    grads.output.bias = upstream;
    if let Some(last) = trace.hidden.last() {
        for (j, h) in last.iter().enumerate() {
            grads.output.weights[j] = upstream * h;
        }
    }

    // Adjoints of the current layer's hidden values.
    let mut lambda: Vec<f64> = net.output().weights().iter().map(|v| upstream * v).collect();
    for l in (0..net.depth()).rev() {
        let layer = &net.layers()[l];
        let lg = &mut grads.layers[l];
        let prev_width = if l == 0 { 0 } else { net.layers()[l - 1].width() };
        let mut next_lambda = vec![0.0; prev_width];
        for j in 0..layer.width() {
            let g = lambda[j] * deriv_of(trace.pre[l][j])?;
            let row = &layer.rows()[j];
            let off = row.offset();
            for i in 0..row.weights().len() {
                lg.inter[j][i] = g * trace.hidden[l - 1][off + i];
                next_lambda[off + i] += row.weights()[i] * g;
            }
            for k in 0..n {
                lg.input[j * n + k] = g * x[k];
            }
            lg.bias[j] = g;
        }
        lambda = next_lambda;
    }
    Ok(grads)
}

/// Optimizer for [`fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    /// Plain gradient step: `theta -= rate * grad`.
    Sgd,
    /// Heavy-ball momentum: `buf = beta * buf + grad; theta -= rate * buf`.
    Momentum { beta: f64 },
}

/// Configuration for [`fit`]. Loss is mean squared error.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Keep the direct input connections beyond layer 1 (and the output's
    /// direct term) fixed during training. With those parameters zeroed in
    /// the initial network, training then behaves exactly like training the
    /// ordinary MLP that shares the remaining parameters.
    pub freeze_input_skips: bool,
}

impl TrainConfig {
    pub fn new(learning_rate: f64, steps: usize, batch_size: usize, seed: u64) -> Self {
        TrainConfig {
            learning_rate,
            steps,
            batch_size,
            seed,
            optimizer: Optimizer::Sgd,
            freeze_input_skips: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be finite and nonnegative, got {}",
                self.learning_rate
            )));
        }
        if self.steps == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument("steps and batch size must be positive".into()));
        }
        if let Optimizer::Momentum { beta } = self.optimizer {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidArgument(format!(
                    "momentum beta must lie in [0, 1), got {beta}"
                )));
            }
        }
        Ok(())
    }
}

fn apply_update(net: &mut VectorNet, dir: &GradientBundle, rate: f64) {
    for (layer, lg) in net.layers.iter_mut().zip(&dir.layers) {
        for (row, gr) in layer.rows.iter_mut().zip(&lg.inter) {
            for (w, g) in row.weights.iter_mut().zip(gr) {
                *w -= rate * g;
            }
        }
        for (w, g) in layer.input.iter_mut().zip(&lg.input) {
            *w -= rate * g;
        }
        for (b, g) in layer.bias.iter_mut().zip(&lg.bias) {
            *b -= rate * g;
        }
    }
    for (w, g) in net.output.weights.iter_mut().zip(&dir.output.weights) {
        *w -= rate * g;
    }
    for (w, g) in net.output.input.iter_mut().zip(&dir.output.input) {
        *w -= rate * g;
    }
    net.output.bias -= rate * dir.output.bias;
}

/// Seeded minibatch gradient descent on mean squared error.
///
/// Sample order is a seeded shuffle, reshuffled each pass through the data;
/// batch gradients accumulate in a fixed order, so the whole run — and the
/// returned per-step loss trace — is bit-reproducible. The loss recorded for
/// a step is the batch MSE *before* that step's update. A non-finite loss
/// aborts with the offending step index.
pub fn fit(
    net: &VectorNet,
    data: &[(Vec<f64>, f64)],
    config: &TrainConfig,
) -> Result<(VectorNet, Vec<f64>)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("training data is empty".into()));
    }
    let n = net.input_dim();
    for (i, (x, y)) in data.iter().enumerate() {
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) || !y.is_finite() {
            return Err(Error::InvalidArgument(format!("training sample {i} is non-finite")));
        }
    }

    let mut current = net.clone();
    let mut rng = SplitMix64::new(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    rng.shuffle(&mut order);
    let mut cursor = 0usize;
    let mut momentum: Option<GradientBundle> = match config.optimizer {
        Optimizer::Sgd => None,
        Optimizer::Momentum { .. } => Some(GradientBundle::zeros_like(&current)),
    };
    let mut losses = Vec::with_capacity(config.steps);

    for step in 0..config.steps {
        let mut batch = Vec::with_capacity(config.batch_size);
        for _ in 0..config.batch_size {
            if cursor == order.len() {
                rng.shuffle(&mut order);
                cursor = 0;
            }
            batch.push(order[cursor]);
            cursor += 1;
        }
        // Accumulate in canonical index order: the step then depends only on
        // which samples were chosen, not on the order the shuffle emitted
        // them, which keeps losses bit-stable (e.g. across full-batch runs).
        batch.sort_unstable();

        let inv = 1.0 / batch.len() as f64;
        let mut grad = GradientBundle::zeros_like(&current);
        let mut loss = 0.0;
        for &i in &batch {
            let (x, y) = &data[i];
            let sample = backward(&current, x, 1.0).map_err(|e| match e {
                Error::NonFiniteEval { .. } | Error::NonFiniteOutput => Error::Divergence(step),
                other => other,
            })?;
            let resid = sample.value - y;
            loss += resid * resid * inv;
            grad.add_scaled(&sample, 2.0 * resid * inv);
        }
        if !loss.is_finite() {
            return Err(Error::Divergence(step));
        }
        losses.push(loss);

        if config.freeze_input_skips {
            grad.mask_input_skips();
        }
        match (&config.optimizer, momentum.as_mut()) {
            (Optimizer::Sgd, _) => apply_update(&mut current, &grad, config.learning_rate),
            (Optimizer::Momentum { beta }, Some(buf)) => {
                buf.scale(*beta);
                buf.add_scaled(&grad, 1.0);
                apply_update(&mut current, buf, config.learning_rate);
            }
            (Optimizer::Momentum { .. }, None) => unreachable!(),
        }
    }
    current.validate().map_err(|_| Error::Divergence(config.steps - 1))?;
    Ok((current, losses))
}

/// A random network with the given hidden widths.
///
/// Per layer, parameters are uniform in `(-s, s)` with `s = 1/sqrt(fan_in)`,
/// where fan-in counts everything the neuron reads (previous width plus the
/// input dimension). The direct input connections beyond layer 1 and the
/// output's direct term are drawn at one tenth of that scale, so they start
/// as genuine skips rather than dominant paths. Draw order is fixed, making
/// the result a pure function of the seed stream.
pub fn random_net(
    rng: &mut SplitMix64,
    input_dim: usize,
    widths: &[usize],
    activation: crate::activation::Activation,
) -> VectorNet {
    let n = input_dim;
    let mut layers = Vec::with_capacity(widths.len());
    let mut prev = 0usize;
    for (l, &width) in widths.iter().enumerate() {
        let fan_in = prev + n;
        let s = 1.0 / (fan_in as f64).sqrt();
        let skip_scale = if l == 0 { 1.0 } else { 0.1 };
        let mut rows = Vec::with_capacity(width);
        let mut input = Vec::with_capacity(width * n);
        let mut bias = Vec::with_capacity(width);
        for _ in 0..width {
            if l == 0 {
                rows.push(Row::empty());
            } else {
                rows.push(Row::dense((0..prev).map(|_| rng.uniform_symmetric(s)).collect()));
            }
            for _ in 0..n {
                input.push(skip_scale * rng.uniform_symmetric(s));
            }
            bias.push(rng.uniform_symmetric(s));
        }
        layers.push(HiddenLayer::new(rows, input, bias));
        prev = width;
    }
    let s_out = 1.0 / ((prev + n) as f64).sqrt();
    let weights = (0..prev).map(|_| rng.uniform_symmetric(s_out)).collect();
    let input = (0..n).map(|_| 0.1 * rng.uniform_symmetric(s_out)).collect();
    let bias = rng.uniform_symmetric(s_out);
    VectorNet::new(n, layers, Output::new(weights, input, bias), activation)
        .expect("random nets are well-formed by construction")
}

/// [`random_net`] with the skip parameters (direct input connections beyond
/// layer 1 and the output's direct term) set to exactly zero, drawing the
/// same values from the stream so the shared parameters match
/// [`random_net`] bit for bit given the same stream state.
pub fn random_net_zero_skips(
    rng: &mut SplitMix64,
    input_dim: usize,
    widths: &[usize],
    activation: crate::activation::Activation,
) -> VectorNet {
    let mut net = random_net(rng, input_dim, widths, activation);
    for layer in net.layers.iter_mut().skip(1) {
        for w in &mut layer.input {
            *w = 0.0;
        }
    }
    for w in &mut net.output.input {
        *w = 0.0;
    }
    net
}
