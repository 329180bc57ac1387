//! Structural operations on networks.
//!
//! These are the closure properties that make input-connected networks a
//! convenient construction kit: depth padding, linear combination,
//! affine input reparameterization, composition with a shallow outer
//! network, and the embedding of ordinary MLPs. Each operation builds a new
//! network whose *function* matches the obvious formula; `pad_depth` is
//! stronger and reproduces the original outputs bit for bit, because dummy
//! neurons are wired in through weights that are structurally absent from
//! every dot product the original network performed.

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::net::{HiddenLayer, Output, Row, ScalarNet, VectorNet};

/// Prepend dummy hidden layers of width 1 until the network has
/// `target_depth` hidden layers. See [`pad_depth_with`].
pub fn pad_depth(net: &VectorNet, target_depth: usize) -> Result<VectorNet> {
    pad_depth_with(net, target_depth, 1)
}

/// Prepend dummy hidden layers of width `dummy_width` until the network has
/// `target_depth` hidden layers.
///
/// Dummy neurons have zero input weights and zero bias, nothing reads them,
/// and the first original layer keeps its structurally-empty inter-layer
/// rows; every arithmetic operation the original network performed happens
/// unchanged, so outputs are bit-identical. A depth-0 network gains a zero
/// output-weight row over the last dummy layer.
pub fn pad_depth_with(
    net: &VectorNet,
    target_depth: usize,
    dummy_width: usize,
) -> Result<VectorNet> {
    let current = net.depth();
    if target_depth < current {
        return Err(Error::PadBelowDepth { target: target_depth, current });
    }
    if dummy_width == 0 {
        return Err(Error::Structure("dummy layers must have positive width".into()));
    }
    if target_depth == current {
        return Ok(net.clone());
    }
    let n = net.input_dim();
    let extra = target_depth - current;
    let mut layers = Vec::with_capacity(target_depth);
    for _ in 0..extra {
        // Zero input weights, zero bias, and (beyond the first) zero-width
        // rows into the previous dummy layer.
        layers.push(HiddenLayer::new(
            vec![Row::empty(); dummy_width],
            vec![0.0; dummy_width * n],
            vec![0.0; dummy_width],
        ));
    }
    layers.extend(net.layers().iter().cloned());
    let output = if current == 0 {
        // The last hidden layer is now a dummy; read it with zero weights.
        Output::new(vec![0.0; dummy_width], net.output().input_weights().to_vec(), net.output().bias())
    } else {
        net.output().clone()
    };
    VectorNet::new(n, layers, output, net.activation())
}

/// The network computing `sum_i coeffs[i] * nets[i](x)`.
///
/// All networks must share the input dimension and activation. Inputs are
/// padded to the deepest depth, hidden layers are stacked side by side
/// (block-diagonal inter-layer weights, so each block still computes its own
/// network's hidden values), output weights are scaled by the coefficients,
/// and the direct output terms are combined linearly.
pub fn linear_combine(nets: &[&VectorNet], coeffs: &[f64]) -> Result<VectorNet> {
    if nets.is_empty() {
        return Err(Error::InvalidArgument("linear_combine needs at least one network".into()));
    }
    if nets.len() != coeffs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} networks but {} coefficients",
            nets.len(),
            coeffs.len()
        )));
    }
    if coeffs.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFiniteParam("combination coefficient"));
    }
    let n = nets[0].input_dim();
    let act = nets[0].activation();
    for m in &nets[1..] {
        if m.input_dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: m.input_dim() });
        }
        if m.activation() != act {
            return Err(Error::ActivationMismatch {
                left: act.name().to_string(),
                right: m.activation().name().to_string(),
            });
        }
    }

    let depth = nets.iter().map(|m| m.depth()).max().unwrap();
    let padded: Vec<VectorNet> =
        nets.iter().map(|m| pad_depth(m, depth)).collect::<Result<_>>()?;

    // Direct input terms combine linearly regardless of depth.
    let mut c = vec![0.0; n];
    let mut d = 0.0;
    for (m, t) in padded.iter().zip(coeffs) {
        for (ci, mi) in c.iter_mut().zip(m.output().input_weights()) {
            *ci += t * mi;
        }
        d += t * m.output().bias();
    }

    if depth == 0 {
        return VectorNet::new(n, Vec::new(), Output::new(Vec::new(), c, d), act);
    }

    let mut layers = Vec::with_capacity(depth);
    for l in 0..depth {
        let mut rows = Vec::new();
        let mut input = Vec::new();
        let mut bias = Vec::new();
        // Offset of each block inside the merged *previous* layer.
        let mut prev_offset = 0usize;
        for m in &padded {
            let layer = &m.layers()[l];
            for row in layer.rows() {
                if l == 0 {
                    rows.push(Row::empty());
                } else {
                    rows.push(Row::new(prev_offset + row.offset(), row.weights().to_vec()));
                }
            }
            input.extend_from_slice(&layer.input);
            bias.extend_from_slice(layer.bias());
            if l > 0 {
                prev_offset += m.layers()[l - 1].width();
            }
        }
        layers.push(HiddenLayer::new(rows, input, bias));
    }

    let mut v = Vec::new();
    for (m, t) in padded.iter().zip(coeffs) {
        v.extend(m.output().weights().iter().map(|w| t * w));
    }
    VectorNet::new(n, layers, Output::new(v, c, d), act)
}

/// `a(x) + b(x)`.
pub fn add(a: &VectorNet, b: &VectorNet) -> Result<VectorNet> {
    linear_combine(&[a, b], &[1.0, 1.0])
}

/// `a(x) - b(x)`.
pub fn subtract(a: &VectorNet, b: &VectorNet) -> Result<VectorNet> {
    linear_combine(&[a, b], &[1.0, -1.0])
}

/// `t * net(x)`.
pub fn scale(net: &VectorNet, t: f64) -> Result<VectorNet> {
    linear_combine(&[net], &[t])
}

/// `net(x) + delta` — adjusts only the output bias, exactly.
pub fn offset_output(net: &VectorNet, delta: f64) -> Result<VectorNet> {
    if !delta.is_finite() {
        return Err(Error::NonFiniteParam("output offset"));
    }
    let mut out = net.clone();
    out.output.bias += delta;
    out.validate()?;
    Ok(out)
}

/// The network computing `net(scale * x + shift)` for scalar networks.
///
/// Only parameters touching the raw input change: every direct input weight
/// is multiplied by `scale` and its bias absorbs `weight * shift`; the
/// output's direct term transforms the same way. Inter-layer weights and
/// output weights are untouched.
pub fn reparam_affine(net: &ScalarNet, scale: f64, shift: f64) -> Result<ScalarNet> {
    if !scale.is_finite() || !shift.is_finite() {
        return Err(Error::NonFiniteParam("input reparameterization"));
    }
    let mut out = net.as_vector().clone();
    for layer in &mut out.layers {
        for j in 0..layer.bias.len() {
            let a = layer.input[j];
            layer.bias[j] += a * shift;
            layer.input[j] = a * scale;
        }
    }
    let c = out.output.input[0];
    out.output.bias += c * shift;
    out.output.input[0] = c * scale;
    out.validate()?;
    ScalarNet::from_vector(out)
}

/// Compose a depth-1 scalar outer network with an arbitrary inner network:
/// the result computes `outer(inner(x))`.
///
/// Requirements: the outer network has exactly one hidden layer, its direct
/// output weight is exactly zero (otherwise the composition would need a
/// copy of `inner` feeding the output linearly), and both networks use the
/// same activation. The construction appends one hidden layer: outer neuron
/// `j`, with input weight `a_j` and bias `b_j`, becomes a neuron reading the
/// inner network's output affinely —
/// inter-layer weights `a_j * v_in`, input weights `a_j * c_in`, bias
/// `a_j * d_in + b_j` — and the new output keeps the outer weights with no
/// direct input term.
pub fn compose_shallow(outer: &ScalarNet, inner: &VectorNet) -> Result<VectorNet> {
    if outer.depth() != 1 {
        return Err(Error::OuterDepth(outer.depth()));
    }
    let c_out = outer.out_input_weight();
    if c_out != 0.0 {
        return Err(Error::OuterOutputSkip(c_out));
    }
    if outer.activation() != inner.activation() {
        return Err(Error::ActivationMismatch {
            left: outer.activation().name().to_string(),
            right: inner.activation().name().to_string(),
        });
    }
    let n = inner.input_dim();
    let outer_vec = outer.as_vector();
    let outer_layer = &outer_vec.layers()[0];
    let width = outer_layer.width();
    let v_in = inner.output().weights();
    let c_in = inner.output().input_weights();
    let d_in = inner.output().bias();

    let mut rows = Vec::with_capacity(width);
    let mut input = Vec::with_capacity(width * n);
    let mut bias = Vec::with_capacity(width);
    for j in 0..width {
        let a_j = outer_layer.input[j];
        let dense: Vec<f64> = v_in.iter().map(|v| a_j * v).collect();
        rows.push(Row::from_dense(&dense));
        input.extend(c_in.iter().map(|c| a_j * c));
        bias.push(a_j * d_in + outer_layer.bias[j]);
    }

    let mut layers = inner.layers().to_vec();
    layers.push(HiddenLayer::new(rows, input, bias));
    let output = Output::new(
        outer_vec.output().weights().to_vec(),
        vec![0.0; n],
        outer_vec.output().bias(),
    );
    VectorNet::new(n, layers, output, inner.activation())
}

/// [`compose_shallow`] for a scalar inner network.
pub fn compose_shallow_scalar(outer: &ScalarNet, inner: &ScalarNet) -> Result<ScalarNet> {
    ScalarNet::from_vector(compose_shallow(outer, inner.as_vector())?)
}

/// One layer of an ordinary MLP: dense weights into the previous layer
/// (the input for the first layer), neuron-major, plus biases.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardLayer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// An ordinary feed-forward MLP: no direct input connections past the first
/// layer and a purely linear read-out. Exists to move networks across the
/// boundary between the two families.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardMlp {
    pub input_dim: usize,
    pub layers: Vec<StandardLayer>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
    pub activation: Activation,
}

impl StandardMlp {
    pub fn new(
        input_dim: usize,
        layers: Vec<StandardLayer>,
        output_weights: Vec<f64>,
        output_bias: f64,
        activation: Activation,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Structure("a standard MLP needs at least one hidden layer".into()));
        }
        let mlp = StandardMlp { input_dim, layers, output_weights, output_bias, activation };
        // Shape-check by building the embedding.
        embed_standard(&mlp)?;
        Ok(mlp)
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(|l| l.bias.len()).collect()
    }
}

/// View an ordinary MLP as an input-connected network computing the same
/// function: direct input connections past the first layer are zero, and so
/// is the output's direct term.
pub fn embed_standard(mlp: &StandardMlp) -> Result<VectorNet> {
    let n = mlp.input_dim;
    let mut layers = Vec::with_capacity(mlp.layers.len());
    let mut prev = 0usize;
    for (li, layer) in mlp.layers.iter().enumerate() {
        let width = layer.bias.len();
        if li == 0 {
            if layer.weights.len() != width * n {
                return Err(Error::Structure(format!(
                    "standard layer 1 has {} weights, expected width*{n} = {}",
                    layer.weights.len(),
                    width * n
                )));
            }
            layers.push(HiddenLayer::first(layer.weights.clone(), layer.bias.clone()));
        } else {
            if layer.weights.len() != width * prev {
                return Err(Error::Structure(format!(
                    "standard layer {} has {} weights, expected width*{prev} = {}",
                    li + 1,
                    layer.weights.len(),
                    width * prev
                )));
            }
            let rows = (0..width)
                .map(|j| Row::dense(layer.weights[j * prev..(j + 1) * prev].to_vec()))
                .collect();
            layers.push(HiddenLayer::new(rows, vec![0.0; width * n], layer.bias.clone()));
        }
        prev = width;
    }
    let output = Output::new(mlp.output_weights.clone(), vec![0.0; n], mlp.output_bias);
    VectorNet::new(n, layers, output, mlp.activation)
}

/// Recover the ordinary MLP from a network in the image of
/// [`embed_standard`]. Fails if any direct input connection past the first
/// layer, or the output's direct term, is nonzero.
pub fn strip_to_standard(net: &VectorNet) -> Result<StandardMlp> {
    if net.depth() == 0 {
        return Err(Error::NotStandardMlp(
            "a standard MLP needs at least one hidden layer".into(),
        ));
    }
    let n = net.input_dim();
    let mut layers = Vec::with_capacity(net.depth());
    let mut prev = 0usize;
    for (li, layer) in net.layers().iter().enumerate() {
        let width = layer.width();
        if li == 0 {
            layers.push(StandardLayer { weights: layer.input.clone(), bias: layer.bias.clone() });
        } else {
            if let Some(j) = (0..width * n).find(|k| layer.input[*k] != 0.0) {
                return Err(Error::NotStandardMlp(format!(
                    "hidden layer {} neuron {} has a direct input connection",
                    li + 1,
                    j / n
                )));
            }
            let mut weights = Vec::with_capacity(width * prev);
            for row in layer.rows() {
                weights.extend(row.to_dense(prev));
            }
            layers.push(StandardLayer { weights, bias: layer.bias.clone() });
        }
        prev = width;
    }
    if let Some(k) = net.output().input_weights().iter().position(|c| *c != 0.0) {
        return Err(Error::NotStandardMlp(format!(
            "output has a direct input connection on axis {k}"
        )));
    }
    Ok(StandardMlp {
        input_dim: n,
        layers,
        output_weights: net.output().weights().to_vec(),
        output_bias: net.output().bias(),
        activation: net.activation(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::train::random_net;

    fn probes(rng: &mut SplitMix64, dim: usize, count: usize, r: f64) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| (0..dim).map(|_| rng.uniform_symmetric(r)).collect())
            .collect()
    }

    #[test]
    fn pad_depth_is_bit_exact() {
        let mut rng = SplitMix64::new(0xAD);
        for act in [Activation::Relu, Activation::Tanh, Activation::Sigmoid] {
            let net = random_net(&mut rng, 2, &[3, 2], act);
            for target in [2, 3, 5] {
                let padded = pad_depth(&net, target).unwrap();
                assert_eq!(padded.depth(), target);
                for x in probes(&mut rng, 2, 50, 2.0) {
                    let a = net.eval(&x).unwrap();
                    let b = padded.eval(&x).unwrap();
                    assert_eq!(a.to_bits(), b.to_bits(), "padding changed bits at {x:?}");
                }
            }
        }
    }

    #[test]
    fn pad_depth_zero_net_is_bit_exact() {
        let mut rng = SplitMix64::new(0xAE);
        let net = VectorNet::affine_with_activation(vec![1.5, -0.25], 0.75, Activation::Tanh)
            .unwrap();
        let padded = pad_depth_with(&net, 3, 2).unwrap();
        assert_eq!(padded.depth(), 3);
        assert_eq!(padded.widths(), vec![2, 2, 2]);
        for x in probes(&mut rng, 2, 50, 3.0) {
            assert_eq!(
                net.eval(&x).unwrap().to_bits(),
                padded.eval(&x).unwrap().to_bits()
            );
        }
    }

    #[test]
    fn pad_depth_rejects_shrinking() {
        let mut rng = SplitMix64::new(1);
        let net = random_net(&mut rng, 1, &[2, 2], Activation::Relu);
        match pad_depth(&net, 1) {
            Err(Error::PadBelowDepth { target: 1, current: 2 }) => {}
            other => panic!("expected PadBelowDepth, got {other:?}"),
        }
    }

    #[test]
    fn linear_combine_matches_the_weighted_sum() {
        let mut rng = SplitMix64::new(0xC0);
        let a = random_net(&mut rng, 2, &[3], Activation::Tanh);
        let b = random_net(&mut rng, 2, &[2, 4], Activation::Tanh);
        let c = VectorNet::affine_with_activation(vec![0.5, -1.0], 0.25, Activation::Tanh)
            .unwrap();
        let coeffs = [2.5, -1.0, 3.0];
        let sum = linear_combine(&[&a, &b, &c], &coeffs).unwrap();
        assert_eq!(sum.depth(), 2);
        assert_eq!(sum.widths(), vec![1 + 2 + 1, 3 + 4 + 1]);
        for x in probes(&mut rng, 2, 100, 2.0) {
            let want = coeffs[0] * a.eval(&x).unwrap()
                + coeffs[1] * b.eval(&x).unwrap()
                + coeffs[2] * c.eval(&x).unwrap();
            let got = sum.eval(&x).unwrap();
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "x={x:?}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn linear_combine_of_affine_nets_stays_depth_zero() {
        let a = VectorNet::affine(vec![1.0, 2.0], 3.0).unwrap();
        let b = VectorNet::affine(vec![-0.5, 0.5], 1.0).unwrap();
        let sum = linear_combine(&[&a, &b], &[2.0, 4.0]).unwrap();
        assert_eq!(sum.depth(), 0);
        assert_eq!(sum.eval(&[1.0, 1.0]).unwrap(), 2.0 * 6.0 + 4.0 * 1.0);
    }

    #[test]
    fn linear_combine_rejects_mismatches() {
        let mut rng = SplitMix64::new(2);
        let a = random_net(&mut rng, 1, &[2], Activation::Tanh);
        let b = random_net(&mut rng, 1, &[2], Activation::Relu);
        let c = random_net(&mut rng, 2, &[2], Activation::Tanh);
        assert!(matches!(
            linear_combine(&[&a, &b], &[1.0, 1.0]),
            Err(Error::ActivationMismatch { .. })
        ));
        assert!(matches!(
            linear_combine(&[&a, &c], &[1.0, 1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            linear_combine(&[&a], &[1.0, 2.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            linear_combine(&[&a], &[f64::NAN]),
            Err(Error::NonFiniteParam(_))
        ));
    }

    #[test]
    fn scale_and_offset_are_linear_in_the_output() {
        let mut rng = SplitMix64::new(3);
        let net = random_net(&mut rng, 1, &[3, 2], Activation::Sigmoid);
        let scaled = scale(&net, -2.0).unwrap();
        let shifted = offset_output(&net, 0.75).unwrap();
        for x in probes(&mut rng, 1, 50, 2.0) {
            let base = net.eval(&x).unwrap();
            let s = scaled.eval(&x).unwrap();
            assert!((s + 2.0 * base).abs() <= 1e-12 * base.abs().max(1.0));
            // The only change is the output bias, so the difference is at
            // most one rounding of the final accumulation.
            let off = shifted.eval(&x).unwrap();
            assert!((off - (base + 0.75)).abs() <= f64::EPSILON * (base.abs() + 1.0));
        }
    }

    #[test]
    fn reparam_affine_composes_with_the_input_map() {
        let mut rng = SplitMix64::new(0xF0);
        let net = ScalarNet::from_vector(random_net(&mut rng, 1, &[3, 3], Activation::Tanh))
            .unwrap();
        let (s, t) = (0.35, -1.2);
        let re = reparam_affine(&net, s, t).unwrap();
        // Inter-layer weights and output weights must be untouched.
        assert_eq!(
            net.as_vector().layers()[1].rows(),
            re.as_vector().layers()[1].rows()
        );
        assert_eq!(net.as_vector().output().weights(), re.as_vector().output().weights());
        for _ in 0..100 {
            let x = rng.uniform_symmetric(4.0);
            let want = net.eval(s * x + t).unwrap();
            let got = re.eval(x).unwrap();
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "x={x}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn compose_shallow_evaluates_outer_of_inner() {
        let mut rng = SplitMix64::new(0xCE);
        let inner = random_net(&mut rng, 2, &[3, 2], Activation::Tanh);
        let outer = ScalarNet::single_hidden(
            Activation::Tanh,
            &[(1.3, -0.2, 0.8), (-0.7, 0.4, 1.1), (0.5, 0.0, -0.6)],
            0.0,
            0.25,
        )
        .unwrap();
        let comp = compose_shallow(&outer, &inner).unwrap();
        assert_eq!(comp.depth(), inner.depth() + 1);
        assert_eq!(comp.output().input_weights(), &[0.0, 0.0]);
        for x in probes(&mut rng, 2, 100, 1.5) {
            let want = outer.eval(inner.eval(&x).unwrap()).unwrap();
            let got = comp.eval(&x).unwrap();
            assert!(
                (got - want).abs() <= 1e-12 * want.abs().max(1.0),
                "x={x:?}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn compose_shallow_accepts_affine_inner() {
        let inner =
            VectorNet::affine_with_activation(vec![2.0, -1.0], 0.5, Activation::Relu).unwrap();
        let outer = ScalarNet::single_hidden(
            Activation::Relu,
            &[(1.0, 0.0, 1.0), (-1.0, 0.0, 1.0)],
            0.0,
            0.0,
        )
        .unwrap();
        // relu(u) + relu(-u) = |u|.
        let comp = compose_shallow(&outer, &inner).unwrap();
        assert_eq!(comp.depth(), 1);
        for x in [[0.0, 0.0], [1.0, 1.0], [-2.0, 0.25], [0.3, 0.9]] {
            let u = 2.0 * x[0] - x[1] + 0.5;
            assert!((comp.eval(&x).unwrap() - u.abs()).abs() <= 1e-12);
        }
    }

    #[test]
    fn compose_shallow_rejects_bad_outers() {
        let mut rng = SplitMix64::new(5);
        let inner = random_net(&mut rng, 1, &[2], Activation::Tanh);
        let deep = ScalarNet::from_vector(random_net(&mut rng, 1, &[2, 2], Activation::Tanh))
            .unwrap();
        assert!(matches!(compose_shallow(&deep, &inner), Err(Error::OuterDepth(2))));

        let skip =
            ScalarNet::single_hidden(Activation::Tanh, &[(1.0, 0.0, 1.0)], 0.5, 0.0).unwrap();
        assert!(matches!(
            compose_shallow(&skip, &inner),
            Err(Error::OuterOutputSkip(c)) if c == 0.5
        ));

        let relu_outer =
            ScalarNet::single_hidden(Activation::Relu, &[(1.0, 0.0, 1.0)], 0.0, 0.0).unwrap();
        assert!(matches!(
            compose_shallow(&relu_outer, &inner),
            Err(Error::ActivationMismatch { .. })
        ));
    }

    #[test]
    fn standard_mlp_embeds_and_strips_losslessly() {
        let mlp = StandardMlp::new(
            2,
            vec![
                StandardLayer { weights: vec![1.0, -0.5, 0.25, 2.0, 0.0, 1.5], bias: vec![0.1, -0.2, 0.3] },
                StandardLayer { weights: vec![0.5, 1.0, -1.0, 2.0, -0.25, 0.75], bias: vec![0.0, 0.4] },
            ],
            vec![1.5, -2.0],
            0.6,
            Activation::Tanh,
        )
        .unwrap();
        let net = embed_standard(&mlp).unwrap();
        assert_eq!(net.widths(), vec![3, 2]);

        // The embedding computes the ordinary forward pass.
        let naive = |x: &[f64]| {
            let h1: Vec<f64> = (0..3)
                .map(|j| {
                    (mlp.layers[0].weights[2 * j] * x[0]
                        + mlp.layers[0].weights[2 * j + 1] * x[1]
                        + mlp.layers[0].bias[j])
                        .tanh()
                })
                .collect();
            let h2: Vec<f64> = (0..2)
                .map(|j| {
                    (mlp.layers[1].weights[3 * j] * h1[0]
                        + mlp.layers[1].weights[3 * j + 1] * h1[1]
                        + mlp.layers[1].weights[3 * j + 2] * h1[2]
                        + mlp.layers[1].bias[j])
                        .tanh()
                })
                .collect();
            1.5 * h2[0] - 2.0 * h2[1] + 0.6
        };
        let mut rng = SplitMix64::new(6);
        for _ in 0..50 {
            let x = [rng.uniform_symmetric(2.0), rng.uniform_symmetric(2.0)];
            let want = naive(&x);
            let got = net.eval(&x).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
        }

        assert_eq!(strip_to_standard(&net).unwrap(), mlp);
    }

    #[test]
    fn strip_rejects_genuinely_input_connected_nets() {
        let mut rng = SplitMix64::new(7);
        let net = random_net(&mut rng, 2, &[2, 2], Activation::Tanh);
        // Random nets have nonzero deep input weights with probability 1.
        assert!(matches!(strip_to_standard(&net), Err(Error::NotStandardMlp(_))));
        let affine = VectorNet::affine(vec![1.0], 0.0).unwrap();
        assert!(matches!(strip_to_standard(&affine), Err(Error::NotStandardMlp(_))));
    }

    #[test]
    fn combined_blocks_preserve_each_networks_hidden_values() {
        // Block-diagonal stacking must keep each block's activations
        // bit-identical to the standalone network's.
        let mut rng = SplitMix64::new(8);
        let a = random_net(&mut rng, 1, &[2, 2], Activation::Tanh);
        let b = random_net(&mut rng, 1, &[3, 1], Activation::Tanh);
        let sum = add(&a, &b).unwrap();
        let x = [0.6];
        let ta = a.eval_trace(&x).unwrap();
        let tb = b.eval_trace(&x).unwrap();
        let ts = sum.eval_trace(&x).unwrap();
        for l in 0..2 {
            let wa = a.widths()[l];
            assert_eq!(&ts.hidden[l][..wa], &ta.hidden[l][..]);
            assert_eq!(&ts.hidden[l][wa..], &tb.hidden[l][..]);
        }
    }
}
