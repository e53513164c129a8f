//! Residual GNN edge classifier and its checkpoint format.

use std::collections::BTreeMap;
use std::path::Path;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seamgnn_core::linalg::Matrix;
use seamgnn_core::SeamLabels;
use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::graph::GraphInput;
use crate::layers::{self, check, Aggregator, SageVars};
use crate::tape::{Gradients, Tape, Var};

pub const CHECKPOINT_FORMAT: &str = "seamgnn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Gcn,
    Gat,
    Sage,
    Gin,
}

impl std::str::FromStr for Arch {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gcn" => Ok(Self::Gcn),
            "gat" => Ok(Self::Gat),
            "sage" => Ok(Self::Sage),
            "gin" => Ok(Self::Gin),
            _ => Err(NnError::InvalidConfig(format!(
                "unknown architecture {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Arch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Gcn => "gcn",
            Self::Gat => "gat",
            Self::Sage => "sage",
            Self::Gin => "gin",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub arch: Arch,
    /// Only used by SAGE.
    pub aggregator: Aggregator,
    pub input_dim: usize,
    pub hidden: usize,
    pub layers: usize,
    /// GAT heads in hidden blocks (concatenated).
    pub hidden_heads: usize,
    /// GAT heads in the last block (averaged).
    pub output_heads: usize,
    /// Probability of dropping an attention coefficient during training.
    pub attention_dropout: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            arch: Arch::Gcn,
            aggregator: Aggregator::Mean,
            input_dim: seamgnn_core::dual::DUAL_FEATURES,
            hidden: 64,
            layers: 3,
            hidden_heads: 3,
            output_heads: 5,
            attention_dropout: 0.2,
        }
    }
}

impl ModelConfig {
    pub fn new(arch: Arch) -> Self {
        Self {
            arch,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(NnError::InvalidConfig(m.to_owned()));
        if self.input_dim == 0 || self.hidden == 0 || self.layers == 0 {
            return bad("input_dim, hidden and layers must be positive");
        }
        if self.hidden_heads == 0 || self.output_heads == 0 {
            return bad("head counts must be positive");
        }
        if !(0.0..1.0).contains(&self.attention_dropout) {
            return bad("attention_dropout must lie in [0, 1)");
        }
        Ok(())
    }

    /// `(input, output)` width of every block.
    pub fn block_widths(&self) -> Vec<(usize, usize)> {
        let mut widths = Vec::with_capacity(self.layers);
        let mut w = self.input_dim;
        for k in 0..self.layers {
            let out = match self.arch {
                Arch::Gat if k + 1 < self.layers => self.hidden * self.hidden_heads,
                _ => self.hidden,
            };
            widths.push((w, out));
            w = out;
        }
        widths
    }
}

/// Per-edge seam probabilities aligned to mesh edge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeamProbabilities(pub Vec<f64>);

impl SeamProbabilities {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn binarize(&self, threshold: f64) -> SeamLabels {
        binarize(&self.0, threshold)
    }
}

/// Label 1 iff `prob ≥ threshold`.
pub fn binarize(probs: &[f64], threshold: f64) -> SeamLabels {
    SeamLabels::from_bools(probs.iter().map(|&p| p >= threshold).collect())
}

/// Mean over rows of `weights[i] · (−log softmax(logits_i)[labels[i]])`.
pub fn weighted_ce_loss(logits: &Matrix, labels: &[usize], weights: &[f64]) -> Result<f64> {
    check("loss labels", logits.rows(), labels.len())?;
    check("loss weights", logits.rows(), weights.len())?;
    if let Some(&l) = labels.iter().find(|&&l| l >= logits.cols()) {
        return Err(NnError::DimensionMismatch {
            what: "label class",
            expected: logits.cols(),
            actual: l,
        });
    }
    let mut t = Tape::new();
    let l = t.leaf(logits.clone());
    let loss = t.weighted_ce(l, Rc::new(labels.to_vec()), Rc::new(weights.to_vec()));
    Ok(t.value(loss).data()[0])
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for x in row.iter_mut() {
            *x = (*x - max).exp();
            sum += *x;
        }
        row.iter_mut().for_each(|x| *x /= sum);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    pub config: ModelConfig,
    /// Named parameter tensors; names are `block{k}.{part}` and `head.{w,b}`.
    pub params: BTreeMap<String, Matrix>,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.random_range(-limit..limit))
            .collect(),
    )
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, limit: f64) -> Matrix {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.random_range(-limit..limit))
            .collect(),
    )
}

/// Tape handles of the parameters of one forward pass.
struct Bound(BTreeMap<String, Var>);

impl Bound {
    fn get(&self, name: &str) -> Var {
        *self
            .0
            .get(name)
            .unwrap_or_else(|| panic!("missing parameter {name}"))
    }
}

impl GnnModel {
    /// Glorot-initialized model; biases and GIN ε start at zero.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = BTreeMap::new();
        let last = config.layers - 1;
        for (k, (din, dout)) in config.block_widths().into_iter().enumerate() {
            let name = |p: &str| format!("block{k}.{p}");
            match config.arch {
                Arch::Gcn => {
                    params.insert(name("w"), glorot(&mut rng, din, dout));
                    params.insert(name("b"), Matrix::zeros(1, dout));
                }
                Arch::Gat => {
                    let heads = if k == last {
                        config.output_heads
                    } else {
                        config.hidden_heads
                    };
                    let width = config.hidden;
                    params.insert(name("w"), glorot(&mut rng, din, heads * width));
                    params.insert(name("att"), glorot(&mut rng, heads, 2 * width));
                    params.insert(name("b"), Matrix::zeros(1, dout));
                }
                Arch::Sage => {
                    params.insert(name("b"), Matrix::zeros(1, dout));
                    match config.aggregator {
                        Aggregator::Gcn => {
                            params.insert(name("w"), glorot(&mut rng, din, dout));
                        }
                        Aggregator::Mean => {
                            params.insert(name("w"), glorot(&mut rng, 2 * din, dout));
                        }
                        Aggregator::Pool => {
                            params.insert(name("pool_w"), glorot(&mut rng, din, din));
                            params.insert(name("pool_b"), Matrix::zeros(1, din));
                            params.insert(name("w"), glorot(&mut rng, 2 * din, dout));
                        }
                        Aggregator::Lstm => {
                            let lim = 1.0 / (din as f64).sqrt();
                            params.insert(name("lstm_wi"), uniform(&mut rng, din, 4 * din, lim));
                            params.insert(name("lstm_wh"), uniform(&mut rng, din, 4 * din, lim));
                            params.insert(name("lstm_b"), Matrix::zeros(1, 4 * din));
                            params.insert(name("w"), glorot(&mut rng, 2 * din, dout));
                        }
                    }
                }
                Arch::Gin => {
                    params.insert(name("eps"), Matrix::zeros(1, 1));
                    params.insert(name("mlp_w1"), glorot(&mut rng, din, dout));
                    params.insert(name("mlp_b1"), Matrix::zeros(1, dout));
                    params.insert(name("mlp_w2"), glorot(&mut rng, dout, dout));
                    params.insert(name("mlp_b2"), Matrix::zeros(1, dout));
                }
            }
            if din != dout {
                params.insert(name("proj"), glorot(&mut rng, din, dout));
            }
        }
        let width = config
            .block_widths()
            .last()
            .map_or(config.input_dim, |w| w.1);
        params.insert("head.w".into(), glorot(&mut rng, width, 2));
        params.insert("head.b".into(), Matrix::zeros(1, 2));
        Ok(Self { config, params })
    }

    pub fn param(&self, name: &str) -> Option<&Matrix> {
        self.params.get(name)
    }

    pub fn parameter_count(&self) -> usize {
        self.params.values().map(|m| m.data().len()).sum()
    }

    /// Sets the head to zero so that every probability is 0.5.
    pub fn zero_head(&mut self) {
        for name in ["head.w", "head.b"] {
            let m = self.params.get_mut(name).expect("head parameter");
            m.data_mut().fill(0.0);
        }
    }

    /// Zeroes every block parameter except residual projections.
    pub fn zero_layers(&mut self) {
        for (name, m) in self.params.iter_mut() {
            if name.starts_with("block") && !name.ends_with(".proj") {
                m.data_mut().fill(0.0);
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.params.values().all(Matrix::is_finite)
    }

    /// Records the forward pass; returns the logits and the parameter handles.
    fn build(
        &self,
        t: &mut Tape,
        g: &GraphInput,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(Var, Bound)> {
        let cfg = &self.config;
        check("feature width", cfg.input_dim, g.features.cols())?;
        let bound = Bound(
            self.params
                .iter()
                .map(|(k, v)| (k.clone(), t.leaf(v.clone())))
                .collect(),
        );
        let mut h = t.leaf(g.features.clone());
        let last = cfg.layers - 1;
        for k in 0..cfg.layers {
            let p = |part: &str| bound.get(&format!("block{k}.{part}"));
            let out = match cfg.arch {
                Arch::Gcn => layers::gcn(t, g, h, p("w"), Some(p("b"))),
                Arch::Gat => {
                    let drop = cfg.attention_dropout;
                    match rng.as_deref_mut() {
                        Some(r) if drop > 0.0 => {
                            let keep = 1.0 / (1.0 - drop);
                            let mut draw = || if r.random::<f64>() < drop { 0.0 } else { keep };
                            layers::gat(
                                t,
                                g,
                                h,
                                p("w"),
                                p("att"),
                                Some(p("b")),
                                k != last,
                                Some(&mut draw),
                            )
                        }
                        _ => layers::gat(t, g, h, p("w"), p("att"), Some(p("b")), k != last, None),
                    }
                }
                Arch::Sage => {
                    let vars = SageVars {
                        w: p("w"),
                        b: Some(p("b")),
                        pool: (cfg.aggregator == Aggregator::Pool)
                            .then(|| (p("pool_w"), p("pool_b"))),
                        lstm: (cfg.aggregator == Aggregator::Lstm)
                            .then(|| (p("lstm_wi"), p("lstm_wh"), p("lstm_b"))),
                    };
                    layers::sage(t, g, h, cfg.aggregator, &vars)
                }
                Arch::Gin => layers::gin(
                    t,
                    g,
                    h,
                    p("eps"),
                    p("mlp_w1"),
                    p("mlp_b1"),
                    p("mlp_w2"),
                    p("mlp_b2"),
                ),
            };
            let skip = match bound.0.get(&format!("block{k}.proj")) {
                Some(&w) => t.matmul(h, w),
                None => h,
            };
            h = t.add(out, skip);
        }
        let logits = t.matmul(h, bound.get("head.w"));
        let logits = t.add_row(logits, bound.get("head.b"));
        Ok((logits, bound))
    }

    /// Per-node logits at inference.
    pub fn logits(&self, g: &GraphInput) -> Result<Matrix> {
        let mut t = Tape::new();
        let (l, _) = self.build(&mut t, g, None)?;
        Ok(t.value(l).clone())
    }

    /// Per-node softmax rows `[p(non-seam), p(seam)]`.
    pub fn node_probs(&self, g: &GraphInput) -> Result<Matrix> {
        Ok(softmax_rows(&self.logits(g)?))
    }

    /// Per-edge seam probabilities; copies of the same edge are averaged.
    pub fn predict(&self, g: &GraphInput) -> Result<SeamProbabilities> {
        let probs = self.node_probs(g)?;
        let mut sum = vec![0.0; g.edge_count];
        let mut count = vec![0usize; g.edge_count];
        for (d, &e) in g.dual_to_edge.iter().enumerate() {
            sum[e] += probs.get(d, 1);
            count[e] += 1;
        }
        Ok(SeamProbabilities(
            sum.iter()
                .zip(&count)
                .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
                .collect(),
        ))
    }

    /// Weighted cross-entropy at inference.
    pub fn loss(&self, g: &GraphInput, labels: &[usize], weights: &[f64]) -> Result<f64> {
        weighted_ce_loss(&self.logits(g)?, labels, weights)
    }

    /// Loss and its exact gradient with respect to every parameter, at
    /// inference (no dropout).
    pub fn gradients(
        &self,
        g: &GraphInput,
        labels: &[usize],
        weights: &[f64],
    ) -> Result<(f64, BTreeMap<String, Matrix>)> {
        self.loss_and_gradients(g, labels, weights, None)
    }

    /// As [`GnnModel::gradients`]; `rng` enables attention dropout.
    pub fn loss_and_gradients(
        &self,
        g: &GraphInput,
        labels: &[usize],
        weights: &[f64],
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(f64, BTreeMap<String, Matrix>)> {
        check("loss labels", g.node_count(), labels.len())?;
        check("loss weights", g.node_count(), weights.len())?;
        let mut t = Tape::new();
        let (logits, bound) = self.build(&mut t, g, rng)?;
        let loss = t.weighted_ce(logits, Rc::new(labels.to_vec()), Rc::new(weights.to_vec()));
        let grads: Gradients = t.backward(loss);
        let out = bound
            .0
            .iter()
            .map(|(name, &v)| {
                let shape = self.params[name].shape();
                let gm = grads
                    .get(v)
                    .cloned()
                    .unwrap_or_else(|| Matrix::zeros(shape.0, shape.1));
                (name.clone(), gm)
            })
            .collect();
        Ok((t.value(loss).data()[0], out))
    }

    pub fn to_json(&self) -> Result<String> {
        if !self.all_finite() {
            return Err(NnError::Checkpoint("parameters are not finite".into()));
        }
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            params: self
                .params
                .iter()
                .map(|(k, m)| {
                    (
                        k.clone(),
                        (0..m.rows()).map(|r| m.row(r).to_vec()).collect(),
                    )
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(s)?;
        if file.format != CHECKPOINT_FORMAT {
            return Err(NnError::Checkpoint(format!(
                "unexpected format tag {:?}",
                file.format
            )));
        }
        if file.version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!(
                "unsupported version {}",
                file.version
            )));
        }
        let reference = Self::new(file.config.clone(), 0)?;
        let mut params = BTreeMap::new();
        for (name, rows) in file.params {
            let Some(expected) = reference.params.get(&name) else {
                return Err(NnError::Checkpoint(format!("unexpected parameter {name}")));
            };
            if rows.len() != expected.rows() || rows.iter().any(|r| r.len() != expected.cols()) {
                return Err(NnError::Checkpoint(format!(
                    "parameter {name} has the wrong shape"
                )));
            }
            params.insert(name, Matrix::from_rows(&rows));
        }
        if let Some(name) = reference.params.keys().find(|k| !params.contains_key(*k)) {
            return Err(NnError::Checkpoint(format!("missing parameter {name}")));
        }
        let model = Self {
            config: file.config,
            params,
        };
        if !model.all_finite() {
            return Err(NnError::Checkpoint("parameters are not finite".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    config: ModelConfig,
    params: BTreeMap<String, Vec<Vec<f64>>>,
}
