//! Model serialization, certificate output, and tabular import/export.
//!
//! Networks are stored as a small JSON document (`format_version` 1):
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "kind": "scalar",              // or "vector"
//!   "input_dim": 1,
//!   "activation": { "name": "tanh", "params": [] },
//!   "layers": [
//!     { "w": [], "a": [1.0], "b": [0.0] },           // layer 1: w empty
//!     { "w": [[0.5]], "a": [0.25], "b": [0.1] }      // deeper: dense w
//!   ],
//!   "output": { "v": [2.0], "c": 0.0, "d": -1.0 }
//! }
//! ```
//!
//! Scalar files use plain arrays for `a` and a number for `c`; vector files
//! use one weight vector per neuron for `a` and an array for `c`. A weight
//! row that touches only a contiguous block of the previous layer — the
//! norm for networks assembled from sub-networks — may be written as
//! `{"o": OFFSET, "w": [...]}` instead of a full-width array, keeping file
//! size proportional to the stored parameters. Numbers are written in
//! shortest round-trip decimal, so `load(save(net))` reproduces every
//! parameter bit for bit and saving the same model twice produces identical
//! bytes. Load errors carry a path into the document (0-indexed, e.g.
//! `layers[1].a[0]`).
//!
//! CSV helpers share the same determinism contract: comma-separated, one
//! header row, LF line endings, shortest round-trip decimals.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::constructive::Certificate;
use crate::error::{Error, Result};
use crate::net::{HiddenLayer, Output, Row, ScalarNet, VectorNet};

pub const FORMAT_VERSION: i64 = 1;

/// A loaded model: scalar or vector network.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Scalar(ScalarNet),
    Vector(VectorNet),
}

impl Model {
    pub fn as_vector(&self) -> &VectorNet {
        match self {
            Model::Scalar(s) => s.as_vector(),
            Model::Vector(v) => v,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.as_vector().input_dim()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.as_vector().eval(x)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: i64,
    kind: String,
    input_dim: usize,
    activation: ActivationFile,
    layers: Vec<LayerFile>,
    output: OutputFile,
}

#[derive(Serialize, Deserialize)]
struct ActivationFile {
    name: String,
    params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    w: Vec<RowFile>,
    a: AField,
    b: Vec<f64>,
}

/// One inter-layer weight row. Rows covering the whole previous layer are
/// plain arrays; rows touching only a contiguous block (common in networks
/// assembled from sub-networks) are stored as `{"o": offset, "w": [...]}`
/// so file size tracks the stored parameters, not `width × prev`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RowFile {
    Dense(Vec<f64>),
    Span { o: usize, w: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AField {
    Scalar(Vec<f64>),
    Vector(Vec<Vec<f64>>),
}

#[derive(Serialize, Deserialize)]
struct OutputFile {
    v: Vec<f64>,
    c: CField,
    d: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CField {
    Scalar(f64),
    Vector(Vec<f64>),
}

fn field_err(path: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::ModelField { path: path.into(), msg: msg.into() }
}

fn check_finite(v: f64, path: impl FnOnce() -> String) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(field_err(path(), format!("non-finite value {v}")))
    }
}

fn activation_to_file(act: Activation) -> Result<ActivationFile> {
    let (name, params) = match act {
        Activation::Relu => ("relu", vec![]),
        Activation::Tanh => ("tanh", vec![]),
        Activation::Sigmoid => ("sigmoid", vec![]),
        Activation::Softplus => ("softplus", vec![]),
        Activation::Identity => ("identity", vec![]),
        Activation::Affine { slope, intercept } => ("affine", vec![slope, intercept]),
        Activation::Custom(c) => {
            return Err(Error::UnserializableActivation(c.name.to_string()))
        }
    };
    Ok(ActivationFile { name: name.to_string(), params })
}

fn activation_from_file(file: &ActivationFile) -> Result<Activation> {
    let act = match file.name.as_str() {
        "relu" => Activation::Relu,
        "tanh" => Activation::Tanh,
        "sigmoid" => Activation::Sigmoid,
        "softplus" => Activation::Softplus,
        "identity" => Activation::Identity,
        "affine" => {
            if file.params.len() != 2 {
                return Err(field_err(
                    "activation.params",
                    format!("affine activation needs [slope, intercept], got {} values", file.params.len()),
                ));
            }
            check_finite(file.params[0], || "activation.params[0]".into())?;
            check_finite(file.params[1], || "activation.params[1]".into())?;
            Activation::Affine { slope: file.params[0], intercept: file.params[1] }
        }
        other => {
            return Err(field_err("activation.name", format!("unknown activation \"{other}\"")))
        }
    };
    if !matches!(act, Activation::Affine { .. }) && !file.params.is_empty() {
        return Err(field_err(
            "activation.params",
            format!("\"{}\" takes no parameters", file.name),
        ));
    }
    Ok(act)
}

fn model_to_file(model: &Model) -> Result<ModelFile> {
    let (kind, net) = match model {
        Model::Scalar(s) => ("scalar", s.as_vector()),
        Model::Vector(v) => ("vector", v),
    };
    let n = net.input_dim();
    let mut layers = Vec::with_capacity(net.depth());
    let mut prev = 0usize;
    for layer in net.layers() {
        let width = layer.width();
        let w: Vec<RowFile> = if prev == 0 {
            Vec::new()
        } else {
            layer
                .rows()
                .iter()
                .map(|r| {
                    if r.offset() == 0 && r.weights().len() == prev {
                        RowFile::Dense(r.weights().to_vec())
                    } else {
                        RowFile::Span { o: r.offset(), w: r.weights().to_vec() }
                    }
                })
                .collect()
        };
        let a = match kind {
            "scalar" => AField::Scalar(layer.input.clone()),
            _ => AField::Vector(
                (0..width).map(|j| layer.input[j * n..(j + 1) * n].to_vec()).collect(),
            ),
        };
        layers.push(LayerFile { w, a, b: layer.bias().to_vec() });
        prev = width;
    }
    let c = match kind {
        "scalar" => CField::Scalar(net.output().input_weights()[0]),
        _ => CField::Vector(net.output().input_weights().to_vec()),
    };
    Ok(ModelFile {
        format_version: FORMAT_VERSION,
        kind: kind.to_string(),
        input_dim: n,
        activation: activation_to_file(net.activation())?,
        layers,
        output: OutputFile { v: net.output().weights().to_vec(), c, d: net.output().bias() },
    })
}

fn model_from_file(file: &ModelFile) -> Result<Model> {
    if file.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion(file.format_version));
    }
    let scalar = match file.kind.as_str() {
        "scalar" => true,
        "vector" => false,
        other => return Err(field_err("kind", format!("expected \"scalar\" or \"vector\", got \"{other}\""))),
    };
    let n = file.input_dim;
    if n == 0 {
        return Err(field_err("input_dim", "must be at least 1"));
    }
    if scalar && n != 1 {
        return Err(field_err("input_dim", format!("scalar models require input_dim 1, got {n}")));
    }
    let activation = activation_from_file(&file.activation)?;

    let mut layers = Vec::with_capacity(file.layers.len());
    let mut prev = 0usize;
    for (li, lf) in file.layers.iter().enumerate() {
        let width = lf.b.len();
        if width == 0 {
            return Err(field_err(format!("layers[{li}].b"), "hidden layers must be nonempty"));
        }
        for (j, b) in lf.b.iter().enumerate() {
            check_finite(*b, || format!("layers[{li}].b[{j}]"))?;
        }

        // Inter-layer weights: structurally absent for the first layer.
        let rows: Vec<Row> = if li == 0 {
            if !lf.w.is_empty() {
                return Err(field_err(
                    format!("layers[{li}].w"),
                    "the first layer has no inter-layer weights; use []",
                ));
            }
            vec![Row::empty(); width]
        } else {
            if lf.w.len() != width {
                return Err(field_err(
                    format!("layers[{li}].w"),
                    format!("expected {width} rows (one per neuron), got {}", lf.w.len()),
                ));
            }
            let mut rows = Vec::with_capacity(width);
            for (j, row) in lf.w.iter().enumerate() {
                let built = match row {
                    RowFile::Dense(w) => {
                        if w.len() != prev {
                            return Err(field_err(
                                format!("layers[{li}].w[{j}]"),
                                format!(
                                    "expected {prev} weights (previous width), got {}",
                                    w.len()
                                ),
                            ));
                        }
                        for (i, v) in w.iter().enumerate() {
                            check_finite(*v, || format!("layers[{li}].w[{j}][{i}]"))?;
                        }
                        Row::dense(w.clone())
                    }
                    RowFile::Span { o, w } => {
                        if o + w.len() > prev {
                            return Err(field_err(
                                format!("layers[{li}].w[{j}]"),
                                format!(
                                    "span offset {o} + length {} exceeds the previous \
                                     width {prev}",
                                    w.len()
                                ),
                            ));
                        }
                        for (i, v) in w.iter().enumerate() {
                            check_finite(*v, || format!("layers[{li}].w[{j}].w[{i}]"))?;
                        }
                        // Keep the offset verbatim even for empty rows so
                        // the load reconstructs the stored structure exactly.
                        Row::new(*o, w.clone())
                    }
                };
                rows.push(built);
            }
            rows
        };

        let input: Vec<f64> = match (&lf.a, scalar) {
            (AField::Scalar(a), true) => {
                if a.len() != width {
                    return Err(field_err(
                        format!("layers[{li}].a"),
                        format!("expected {width} input weights, got {}", a.len()),
                    ));
                }
                for (j, v) in a.iter().enumerate() {
                    check_finite(*v, || format!("layers[{li}].a[{j}]"))?;
                }
                a.clone()
            }
            (AField::Vector(a), false) => {
                if a.len() != width {
                    return Err(field_err(
                        format!("layers[{li}].a"),
                        format!("expected {width} input vectors, got {}", a.len()),
                    ));
                }
                let mut flat = Vec::with_capacity(width * n);
                for (j, row) in a.iter().enumerate() {
                    if row.len() != n {
                        return Err(field_err(
                            format!("layers[{li}].a[{j}]"),
                            format!("expected length {n} (input_dim), got {}", row.len()),
                        ));
                    }
                    for (k, v) in row.iter().enumerate() {
                        check_finite(*v, || format!("layers[{li}].a[{j}][{k}]"))?;
                    }
                    flat.extend_from_slice(row);
                }
                flat
            }
            (AField::Scalar(_), false) => {
                return Err(field_err(
                    format!("layers[{li}].a"),
                    "vector models store one input-weight vector per neuron",
                ))
            }
            (AField::Vector(_), true) => {
                return Err(field_err(
                    format!("layers[{li}].a"),
                    "scalar models store a flat array of input weights",
                ))
            }
        };

        layers.push(HiddenLayer::new(rows, input, lf.b.clone()));
        prev = width;
    }

    if file.output.v.len() != prev {
        return Err(field_err(
            "output.v",
            format!("expected {prev} weights (last hidden width), got {}", file.output.v.len()),
        ));
    }
    for (j, v) in file.output.v.iter().enumerate() {
        check_finite(*v, || format!("output.v[{j}]"))?;
    }
    let c: Vec<f64> = match (&file.output.c, scalar) {
        (CField::Scalar(c), true) => {
            check_finite(*c, || "output.c".into())?;
            vec![*c]
        }
        (CField::Vector(c), false) => {
            if c.len() != n {
                return Err(field_err(
                    "output.c",
                    format!("expected length {n} (input_dim), got {}", c.len()),
                ));
            }
            for (k, v) in c.iter().enumerate() {
                check_finite(*v, || format!("output.c[{k}]"))?;
            }
            c.clone()
        }
        (CField::Scalar(_), false) => {
            return Err(field_err("output.c", "vector models store c as an array"))
        }
        (CField::Vector(_), true) => {
            return Err(field_err("output.c", "scalar models store c as a number"))
        }
    };
    check_finite(file.output.d, || "output.d".into())?;

    let net = VectorNet::new(n, layers, Output::new(file.output.v.clone(), c, file.output.d), activation)
        .map_err(|e| field_err("", e.to_string()))?;
    Ok(if scalar {
        Model::Scalar(ScalarNet::from_vector(net)?)
    } else {
        Model::Vector(net)
    })
}

/// Serialize a model to deterministic JSON bytes.
pub fn to_json(model: &Model) -> Result<Vec<u8>> {
    let file = model_to_file(model)?;
    let mut bytes = serde_json::to_vec_pretty(&file)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Parse a model from JSON bytes.
pub fn from_json(bytes: &[u8]) -> Result<Model> {
    let file: ModelFile = serde_json::from_slice(bytes)?;
    model_from_file(&file)
}

pub fn save(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, to_json(model)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Model> {
    from_json(&fs::read(path)?)
}

/// Save a vector network (kind "vector").
pub fn save_vector(net: &VectorNet, path: &Path) -> Result<()> {
    save(&Model::Vector(net.clone()), path)
}

/// Save a scalar network (kind "scalar").
pub fn save_scalar(net: &ScalarNet, path: &Path) -> Result<()> {
    save(&Model::Scalar(net.clone()), path)
}

/// Save an approximation certificate as pretty JSON.
pub fn save_certificate(cert: &Certificate, path: &Path) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(cert)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

/// Write a CSV table: header row, then one row per record, LF endings,
/// shortest round-trip decimals. Identical input produces identical bytes.
pub fn export_table(columns: &[&str], rows: &[Vec<f64>], path: &Path) -> Result<()> {
    fs::write(path, render_table(columns, rows)?)?;
    Ok(())
}

/// The CSV bytes [`export_table`] writes.
pub fn render_table(columns: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    if columns.is_empty() {
        return Err(Error::InvalidArgument("a table needs at least one column".into()));
    }
    let mut out = String::new();
    out.push_str(&columns.join(","));
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        if row.len() != columns.len() {
            return Err(Error::InvalidArgument(format!(
                "row {i} has {} values for {} columns",
                row.len(),
                columns.len()
            )));
        }
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&format_f64(*v));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Shortest round-trip decimal form of `v`.
pub fn format_f64(v: f64) -> String {
    // Rust's float Display is shortest-round-trip; keep NaN/inf out of tables.
    debug_assert!(v.is_finite(), "tables store finite numbers");
    format!("{v}")
}

/// Read a CSV of numeric rows. An initial non-numeric row is treated as a
/// header and skipped; blank lines are ignored; any other malformed content
/// fails with its 1-based line number.
pub fn read_numeric_rows(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            trimmed.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(e) => {
                if line == 1 {
                    continue; // header row
                }
                return Err(Error::Table { line, msg: e.to_string() });
            }
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Table { line, msg: "non-finite value".into() });
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::Table {
                    line,
                    msg: format!("expected {w} fields as in earlier rows, got {}", values.len()),
                })
            }
            _ => {}
        }
        rows.push(values);
    }
    Ok(rows)
}

/// Read a training dataset: each row is the input coordinates followed by
/// the target value (so at least two columns).
pub fn read_dataset(path: &Path) -> Result<Vec<(Vec<f64>, f64)>> {
    let rows = read_numeric_rows(path)?;
    if rows.is_empty() {
        return Err(Error::Table { line: 1, msg: "dataset is empty".into() });
    }
    if rows[0].len() < 2 {
        return Err(Error::Table {
            line: if rows[0].len() == 1 { 1 } else { 2 },
            msg: "dataset rows need input columns plus a target column".into(),
        });
    }
    Ok(rows
        .into_iter()
        .map(|mut r| {
            let y = r.pop().unwrap();
            (r, y)
        })
        .collect())
}
