//! Network types and evaluation.
//!
//! [`VectorNet`] is the general container: `n`-dimensional input, hidden
//! layers with inter-layer weights, per-neuron direct input connections, and
//! an output neuron with its own direct input term. [`ScalarNet`] wraps a
//! `VectorNet` with `input_dim == 1` and exposes scalar-flavoured accessors;
//! the two evaluate through the same code path, so they agree by construction.
//!
//! The first hidden layer has no predecessor layer: its inter-layer weight
//! block is structurally absent (every [`Row`] is empty) and its whole
//! pre-activation comes from the direct input connections. Networks are
//! immutable once built and evaluation is pure, so a network can be shared
//! across threads freely.

use crate::activation::Activation;
use crate::error::{Error, Result};

/// One neuron's inter-layer weights, stored as a contiguous block.
///
/// The neuron reads `prev[offset .. offset + weights.len()]`; everything
/// outside the block is an exact structural zero. Block-diagonal merges and
/// layer-extension constructions only ever need contiguous blocks, so this
/// representation never stores the zeros they would otherwise materialize.
/// A `Row` with an empty weight vector reads nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub(crate) offset: usize,
    pub(crate) weights: Vec<f64>,
}

impl Row {
    pub fn new(offset: usize, weights: Vec<f64>) -> Self {
        Row { offset, weights }
    }

    /// A row covering the whole previous layer.
    pub fn dense(weights: Vec<f64>) -> Self {
        Row { offset: 0, weights }
    }

    pub fn empty() -> Self {
        Row { offset: 0, weights: Vec::new() }
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The weight against neuron `i` of the previous layer (zero off-block).
    pub fn weight(&self, i: usize) -> f64 {
        if i < self.offset {
            0.0
        } else {
            self.weights.get(i - self.offset).copied().unwrap_or(0.0)
        }
    }

    /// Materialize the row as a dense vector of length `width`.
    pub fn to_dense(&self, width: usize) -> Vec<f64> {
        let mut out = vec![0.0; width];
        out[self.offset..self.offset + self.weights.len()].copy_from_slice(&self.weights);
        out
    }

    /// Rebuild a block row from a dense one by trimming leading and trailing
    /// exact zeros. Interior zeros are kept, so the dense view round-trips.
    pub fn from_dense(dense: &[f64]) -> Self {
        let first = dense.iter().position(|w| *w != 0.0);
        match first {
            None => Row::empty(),
            Some(first) => {
                let last = dense.iter().rposition(|w| *w != 0.0).unwrap();
                Row { offset: first, weights: dense[first..=last].to_vec() }
            }
        }
    }

    fn dot(&self, prev: &[f64]) -> f64 {
        let end = self.offset + self.weights.len();
        dot(&self.weights, &prev[self.offset..end])
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// One hidden layer: `width` neurons, each with an inter-layer weight row,
/// `input_dim` direct input weights, and a bias.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenLayer {
    pub(crate) rows: Vec<Row>,
    /// Direct input weights, neuron-major: neuron `j` owns
    /// `input[j*n .. (j+1)*n]`.
    pub(crate) input: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

impl HiddenLayer {
    pub fn new(rows: Vec<Row>, input: Vec<f64>, bias: Vec<f64>) -> Self {
        HiddenLayer { rows, input, bias }
    }

    /// A first hidden layer: no inter-layer rows, only input connections.
    pub fn first(input: Vec<f64>, bias: Vec<f64>) -> Self {
        let rows = vec![Row::empty(); bias.len()];
        HiddenLayer { rows, input, bias }
    }

    pub fn width(&self) -> usize {
        self.bias.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Direct input weights of neuron `j` (length = input dimension).
    pub fn input_weights(&self, j: usize, input_dim: usize) -> &[f64] {
        &self.input[j * input_dim..(j + 1) * input_dim]
    }
}

/// The output neuron: linear weights over the last hidden layer, direct
/// input weights `c`, and bias `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub(crate) weights: Vec<f64>,
    pub(crate) input: Vec<f64>,
    pub(crate) bias: f64,
}

impl Output {
    pub fn new(weights: Vec<f64>, input: Vec<f64>, bias: f64) -> Self {
        Output { weights, input, bias }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn input_weights(&self) -> &[f64] {
        &self.input
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }
}

/// All hidden activations of one evaluation, plus the output.
///
/// `hidden[l]` holds the activations of hidden layer `l+1`; recomputing
/// `sum_j v[j]*hidden.last()[j] + c·x + d` reproduces `output` exactly.
#[derive(Debug, Clone)]
pub struct Trace {
    /// Pre-activation sums, one vector per hidden layer.
    pub pre: Vec<Vec<f64>>,
    /// Activations, one vector per hidden layer.
    pub hidden: Vec<Vec<f64>>,
    pub output: f64,
}

/// An input-connected MLP with `input_dim`-dimensional input.
///
/// Depth 0 is legal: no hidden layers, empty output weights, and the network
/// computes `c · x + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorNet {
    pub(crate) input_dim: usize,
    pub(crate) layers: Vec<HiddenLayer>,
    pub(crate) output: Output,
    pub(crate) activation: Activation,
}

impl VectorNet {
    /// Build and validate a network. Shape rules:
    ///
    /// * `input_dim >= 1`;
    /// * every hidden layer is nonempty;
    /// * first-layer rows are empty; deeper rows fit inside the previous width;
    /// * `input.len() == width * input_dim` per layer, `bias.len() == width`;
    /// * output weights match the last width (empty for depth 0);
    /// * every parameter is finite.
    pub fn new(
        input_dim: usize,
        layers: Vec<HiddenLayer>,
        output: Output,
        activation: Activation,
    ) -> Result<Self> {
        let net = VectorNet { input_dim, layers, output, activation };
        net.validate()?;
        Ok(net)
    }

    /// The depth-0 network `x ↦ c · x + d`.
    pub fn affine(c: Vec<f64>, d: f64) -> Result<Self> {
        let n = c.len();
        VectorNet::new(
            n,
            Vec::new(),
            Output::new(Vec::new(), c, d),
            Activation::Identity,
        )
    }

    /// Same as [`VectorNet::affine`] but with an explicit activation, so the
    /// result can be combined with networks that use one.
    pub fn affine_with_activation(c: Vec<f64>, d: f64, activation: Activation) -> Result<Self> {
        let n = c.len();
        VectorNet::new(n, Vec::new(), Output::new(Vec::new(), c, d), activation)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Structure("input dimension must be at least 1".into()));
        }
        let n = self.input_dim;
        let mut prev_width: Option<usize> = None;
        for (li, layer) in self.layers.iter().enumerate() {
            let width = layer.bias.len();
            if width == 0 {
                return Err(Error::Structure(format!(
                    "hidden layer {} is empty; widths must be positive",
                    li + 1
                )));
            }
            if layer.rows.len() != width {
                return Err(Error::Structure(format!(
                    "hidden layer {} has {} weight rows for {} neurons",
                    li + 1,
                    layer.rows.len(),
                    width
                )));
            }
            if layer.input.len() != width * n {
                return Err(Error::Structure(format!(
                    "hidden layer {} has {} input weights, expected width*{n} = {}",
                    li + 1,
                    layer.input.len(),
                    width * n
                )));
            }
            for (j, row) in layer.rows.iter().enumerate() {
                match prev_width {
                    None => {
                        if !row.weights.is_empty() {
                            return Err(Error::Structure(format!(
                                "first hidden layer neuron {j} carries inter-layer weights; \
                                 the first layer reads only the input"
                            )));
                        }
                    }
                    Some(pw) => {
                        if row.offset + row.weights.len() > pw {
                            return Err(Error::Structure(format!(
                                "hidden layer {} neuron {j} reads past the previous width {pw}",
                                li + 1
                            )));
                        }
                    }
                }
                if row.weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::Structure(format!(
                        "hidden layer {} neuron {j} has a non-finite weight",
                        li + 1
                    )));
                }
            }
            if layer.input.iter().any(|w| !w.is_finite())
                || layer.bias.iter().any(|b| !b.is_finite())
            {
                return Err(Error::Structure(format!(
                    "hidden layer {} has a non-finite input weight or bias",
                    li + 1
                )));
            }
            prev_width = Some(width);
        }
        let last_width = prev_width.unwrap_or(0);
        if self.output.weights.len() != last_width {
            return Err(Error::Structure(format!(
                "output has {} weights for a last hidden width of {last_width}",
                self.output.weights.len()
            )));
        }
        if self.output.input.len() != n {
            return Err(Error::Structure(format!(
                "output has {} direct input weights, expected {n}",
                self.output.input.len()
            )));
        }
        if self.output.weights.iter().any(|w| !w.is_finite())
            || self.output.input.iter().any(|w| !w.is_finite())
            || !self.output.bias.is_finite()
        {
            return Err(Error::Structure("output has a non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    /// Number of hidden layers.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(HiddenLayer::width).collect()
    }

    pub fn layers(&self) -> &[HiddenLayer] {
        &self.layers
    }

    pub fn output(&self) -> &Output {
        &self.output
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Logical parameter count: dense inter-layer blocks (including
    /// structural zeros), input connections, biases, and the output neuron.
    pub fn param_count(&self) -> usize {
        let n = self.input_dim;
        let mut count = 0;
        let mut prev = 0usize;
        for layer in &self.layers {
            let w = layer.width();
            count += w * prev; // inter-layer block (absent for the first layer)
            count += w * n + w; // input connections and biases
            prev = w;
        }
        count + prev + n + 1 // output weights, c, d
    }

    /// The stored parameters, flattened in canonical order: per hidden
    /// layer, every weight row (neuron order, trimmed spans as stored),
    /// then the input-connection block, then the biases; finally the output
    /// weights, the output's input weights, and the output bias. The order
    /// matches [`crate::train::GradientBundle::flat`]. Unlike
    /// [`Self::param_count`], which counts the logical dense shape, this
    /// only includes weights that are actually stored.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            for row in layer.rows() {
                out.extend_from_slice(row.weights());
            }
            out.extend_from_slice(&layer.input);
            out.extend_from_slice(layer.bias());
        }
        out.extend_from_slice(&self.output.weights);
        out.extend_from_slice(&self.output.input);
        out.push(self.output.bias);
        out
    }

    /// Rebuild the network with identical structure (row offsets and spans,
    /// widths, activation) but parameter values taken from `flat`, which
    /// must be in [`Self::flat_params`] order and length.
    pub fn with_flat_params(&self, flat: &[f64]) -> Result<VectorNet> {
        let expected: usize = self
            .layers
            .iter()
            .map(|l| {
                l.rows().iter().map(|r| r.weights().len()).sum::<usize>()
                    + l.width() * self.input_dim
                    + l.width()
            })
            .sum::<usize>()
            + self.output.weights.len()
            + self.input_dim
            + 1;
        if flat.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: flat.len() });
        }
        let mut it = flat.iter();
        let mut take = |k: usize| -> Vec<f64> { it.by_ref().take(k).copied().collect() };
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let rows: Vec<Row> = layer
                .rows()
                .iter()
                .map(|r| {
                    let w = take(r.weights().len());
                    if w.is_empty() {
                        Row::empty()
                    } else {
                        Row::new(r.offset(), w)
                    }
                })
                .collect();
            let input = take(self.input_dim * layer.width());
            let bias = take(layer.width());
            layers.push(HiddenLayer::new(rows, input, bias));
        }
        let weights = take(self.output.weights.len());
        let input = take(self.input_dim);
        let bias = take(1)[0];
        VectorNet::new(self.input_dim, layers, Output::new(weights, input, bias), self.activation)
    }

    /// Evaluate the network at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.forward(x, None)
    }

    /// Evaluate and keep every hidden pre-activation and activation.
    pub fn eval_trace(&self, x: &[f64]) -> Result<Trace> {
        let mut trace = Trace {
            pre: Vec::with_capacity(self.layers.len()),
            hidden: Vec::with_capacity(self.layers.len()),
            output: 0.0,
        };
        let out = self.forward(x, Some(&mut trace))?;
        trace.output = out;
        Ok(trace)
    }

    fn forward(&self, x: &[f64], mut trace: Option<&mut Trace>) -> Result<f64> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch { expected: self.input_dim, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let n = self.input_dim;
        let mut prev: Vec<f64> = Vec::new();
        let mut cur: Vec<f64> = Vec::new();
        for (li, layer) in self.layers.iter().enumerate() {
            let width = layer.width();
            cur.clear();
            cur.reserve(width);
            let mut pres = trace.as_ref().map(|_| Vec::with_capacity(width));
            for j in 0..width {
                let mut acc = layer.rows[j].dot(&prev);
                acc += dot(&layer.input[j * n..(j + 1) * n], x);
                acc += layer.bias[j];
                let h = self.activation.eval(acc);
                if !h.is_finite() || !acc.is_finite() {
                    return Err(Error::NonFiniteEval { layer: li + 1, neuron: j });
                }
                if let Some(p) = pres.as_mut() {
                    p.push(acc);
                }
                cur.push(h);
            }
            if let Some(t) = trace.as_deref_mut() {
                t.pre.push(pres.take().unwrap());
                t.hidden.push(cur.clone());
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        let mut out = dot(&self.output.weights, &prev);
        out += dot(&self.output.input, x);
        out += self.output.bias;
        if !out.is_finite() {
            return Err(Error::NonFiniteOutput);
        }
        Ok(out)
    }

    /// Evaluate on many points, reusing buffers.
    pub fn eval_many(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        points.iter().map(|p| self.eval(p)).collect()
    }
}

/// An input-connected MLP with scalar input.
///
/// Semantically identical to a [`VectorNet`] with `input_dim == 1`; the
/// wrapper exists so scalar-only operations (affine input reparameterization,
/// shallow composition outers) can demand it in their signatures.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarNet {
    pub(crate) net: VectorNet,
}

impl ScalarNet {
    /// Wrap a one-dimensional network.
    pub fn from_vector(net: VectorNet) -> Result<Self> {
        if net.input_dim != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: net.input_dim });
        }
        Ok(ScalarNet { net })
    }

    /// The depth-0 network `x ↦ c·x + d`.
    pub fn affine(c: f64, d: f64) -> Result<Self> {
        Ok(ScalarNet { net: VectorNet::affine(vec![c], d)? })
    }

    /// A depth-1 network from `(a, b, v)` triples: hidden neuron `j` computes
    /// `act(a_j·x + b_j)` and the output is `sum_j v_j·h_j + c·x + d`.
    pub fn single_hidden(
        activation: Activation,
        neurons: &[(f64, f64, f64)],
        c: f64,
        d: f64,
    ) -> Result<Self> {
        let input: Vec<f64> = neurons.iter().map(|(a, _, _)| *a).collect();
        let bias: Vec<f64> = neurons.iter().map(|(_, b, _)| *b).collect();
        let v: Vec<f64> = neurons.iter().map(|(_, _, v)| *v).collect();
        let net = VectorNet::new(
            1,
            vec![HiddenLayer::first(input, bias)],
            Output::new(v, vec![c], d),
            activation,
        )?;
        Ok(ScalarNet { net })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.net.eval(&[x])
    }

    pub fn eval_trace(&self, x: f64) -> Result<Trace> {
        self.net.eval_trace(&[x])
    }

    pub fn as_vector(&self) -> &VectorNet {
        &self.net
    }

    pub fn into_vector(self) -> VectorNet {
        self.net
    }

    pub fn depth(&self) -> usize {
        self.net.depth()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.net.widths()
    }

    pub fn activation(&self) -> Activation {
        self.net.activation
    }

    /// Direct input weight `a[l][j]` (layers 1-based).
    pub fn input_weight(&self, layer: usize, j: usize) -> f64 {
        self.net.layers[layer - 1].input[j]
    }

    /// Bias `b[l][j]` (layers 1-based).
    pub fn bias(&self, layer: usize, j: usize) -> f64 {
        self.net.layers[layer - 1].bias[j]
    }

    /// The output's direct input weight `c`.
    pub fn out_input_weight(&self) -> f64 {
        self.net.output.input[0]
    }

    /// The output bias `d`.
    pub fn out_bias(&self) -> f64 {
        self.net.output.bias
    }

    pub fn output(&self) -> &Output {
        &self.net.output
    }
}
