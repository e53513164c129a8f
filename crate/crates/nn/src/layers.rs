//! The four message-passing layer types.
//!
//! Each layer has a tape builder used by the model and a matrix-level entry
//! point for direct evaluation. Activations are applied inside the layer:
//! ReLU for GCN, SAGE and GIN, ELU for GAT.

use std::rc::Rc;

use seamgnn_core::linalg::Matrix;

use crate::error::{NnError, Result};
use crate::graph::GraphInput;
use crate::tape::{Tape, Var};

/// Negative slope of the LeakyReLU inside attention scores.
pub const ATTENTION_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    Mean,
    Pool,
    Lstm,
    Gcn,
}

impl std::str::FromStr for Aggregator {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean" => Ok(Self::Mean),
            "pool" => Ok(Self::Pool),
            "lstm" => Ok(Self::Lstm),
            "gcn" => Ok(Self::Gcn),
            _ => Err(NnError::InvalidConfig(format!("unknown aggregator {s:?}"))),
        }
    }
}

impl std::fmt::Display for Aggregator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Mean => "mean",
            Self::Pool => "pool",
            Self::Lstm => "lstm",
            Self::Gcn => "gcn",
        })
    }
}

pub(crate) fn check(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(NnError::DimensionMismatch {
            what,
            expected,
            actual,
        })
    }
}

fn with_bias(t: &mut Tape, x: Var, b: Option<Var>) -> Var {
    match b {
        Some(b) => t.add_row(x, b),
        None => x,
    }
}

/// `ReLU(Â H W + b)`.
pub(crate) fn gcn(t: &mut Tape, g: &GraphInput, h: Var, w: Var, b: Option<Var>) -> Var {
    let hw = t.matmul(h, w);
    let agg = t.spmm(&g.gcn, hw);
    let agg = with_bias(t, agg, b);
    t.relu(agg)
}

/// Multi-head attention, bias, then ELU. `w` is `in × heads·width`, `att`
/// is `heads × 2·width`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gat(
    t: &mut Tape,
    g: &GraphInput,
    h: Var,
    w: Var,
    att: Var,
    b: Option<Var>,
    concat: bool,
    dropout: Option<&mut dyn FnMut() -> f64>,
) -> Var {
    let heads = t.value(att).rows();
    let z = t.matmul(h, w);
    let out = t.attention(
        z,
        att,
        Rc::clone(&g.closed_neighbors),
        heads,
        concat,
        ATTENTION_SLOPE,
        dropout,
    );
    let out = with_bias(t, out, b);
    t.elu(out)
}

/// Parameters of a SAGE layer. `w` acts on `[h ‖ agg]` for mean, pool and
/// lstm and on the closed-neighbourhood mean for gcn.
pub struct SageVars {
    pub w: Var,
    pub b: Option<Var>,
    pub pool: Option<(Var, Var)>,
    pub lstm: Option<(Var, Var, Var)>,
}

pub(crate) fn sage(t: &mut Tape, g: &GraphInput, h: Var, agg: Aggregator, p: &SageVars) -> Var {
    let pre = match agg {
        Aggregator::Gcn => {
            let m = t.spmm(&g.mean_closed, h);
            t.matmul(m, p.w)
        }
        Aggregator::Mean => {
            let m = t.spmm(&g.mean, h);
            let c = t.concat(h, m);
            t.matmul(c, p.w)
        }
        Aggregator::Pool => {
            let (pw, pb) = p.pool.expect("pool parameters");
            let a = t.matmul(h, pw);
            let a = t.add_row(a, pb);
            let a = t.relu(a);
            let m = t.neighbor_max(a, &g.neighbors);
            let c = t.concat(h, m);
            t.matmul(c, p.w)
        }
        Aggregator::Lstm => {
            let (wi, wh, b) = p.lstm.expect("lstm parameters");
            let m = lstm(t, g, h, wi, wh, b);
            let c = t.concat(h, m);
            t.matmul(c, p.w)
        }
    };
    let pre = with_bias(t, pre, p.b);
    t.relu(pre)
}

/// Final hidden state of an LSTM run over each node's neighbours in
/// ascending index order; zero for isolated nodes. Gate layout in the
/// `4·d` columns: input, forget, cell, output.
fn lstm(t: &mut Tape, g: &GraphInput, h: Var, wi: Var, wh: Var, b: Var) -> Var {
    let n = g.node_count();
    let d = t.value(wh).rows();
    let mut hs = t.leaf(Matrix::zeros(n, d));
    let mut cs = t.leaf(Matrix::zeros(n, d));
    for step in 0..g.max_degree() {
        let idx: Vec<usize> = (0..n)
            .map(|v| g.neighbors[v].get(step).copied().unwrap_or(v))
            .collect();
        let mask: Rc<Vec<f64>> = Rc::new(
            (0..n)
                .map(|v| f64::from(u8::from(step < g.neighbors[v].len())))
                .collect(),
        );
        let x = t.gather(h, Rc::new(idx));
        let a = t.matmul(x, wi);
        let r = t.matmul(hs, wh);
        let gates = t.add(a, r);
        let gates = t.add_row(gates, b);
        let i = t.cols(gates, 0, d);
        let i = t.sigmoid(i);
        let f = t.cols(gates, d, d);
        let f = t.sigmoid(f);
        let c_in = t.cols(gates, 2 * d, d);
        let c_in = t.tanh(c_in);
        let o = t.cols(gates, 3 * d, d);
        let o = t.sigmoid(o);
        let keep = t.mul(f, cs);
        let write = t.mul(i, c_in);
        let c_new = t.add(keep, write);
        let c_act = t.tanh(c_new);
        let h_new = t.mul(o, c_act);
        cs = t.blend(Rc::clone(&mask), c_new, cs);
        hs = t.blend(mask, h_new, hs);
    }
    hs
}

/// `ReLU(MLP((1 + ε) h_v + Σ_{u ∈ N(v)} h_u))` with a two-layer ReLU MLP.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gin(
    t: &mut Tape,
    g: &GraphInput,
    h: Var,
    eps: Var,
    w1: Var,
    b1: Var,
    w2: Var,
    b2: Var,
) -> Var {
    let s = t.spmm(&g.sum, h);
    let e = t.scalar_mul(eps, h);
    let x = t.add(h, e);
    let x = t.add(x, s);
    let y = t.matmul(x, w1);
    let y = t.add_row(y, b1);
    let y = t.relu(y);
    let y = t.matmul(y, w2);
    let y = t.add_row(y, b2);
    t.relu(y)
}

fn check_input(g: &GraphInput, h: &Matrix, w_rows: usize) -> Result<()> {
    check("layer input rows", g.node_count(), h.rows())?;
    check("layer input width", w_rows, h.cols())
}

fn bias_leaf(t: &mut Tape, b: Option<&Matrix>, width: usize) -> Result<Option<Var>> {
    match b {
        Some(b) => {
            check("bias rows", 1, b.rows())?;
            check("bias width", width, b.cols())?;
            Ok(Some(t.leaf(b.clone())))
        }
        None => Ok(None),
    }
}

/// Evaluates a GCN layer on plain matrices.
pub fn gcn_layer(g: &GraphInput, h: &Matrix, w: &Matrix, b: Option<&Matrix>) -> Result<Matrix> {
    check_input(g, h, w.rows())?;
    let mut t = Tape::new();
    let (hv, wv) = (t.leaf(h.clone()), t.leaf(w.clone()));
    let bv = bias_leaf(&mut t, b, w.cols())?;
    let out = gcn(&mut t, g, hv, wv, bv);
    Ok(t.value(out).clone())
}

/// Evaluates a GAT layer at inference (no dropout).
pub fn gat_layer(
    g: &GraphInput,
    h: &Matrix,
    w: &Matrix,
    att: &Matrix,
    b: Option<&Matrix>,
    concat: bool,
) -> Result<Matrix> {
    check_input(g, h, w.rows())?;
    let heads = att.rows();
    if heads == 0 || !w.cols().is_multiple_of(heads) {
        return Err(NnError::DimensionMismatch {
            what: "attention heads",
            expected: heads,
            actual: w.cols(),
        });
    }
    check("attention vector width", 2 * (w.cols() / heads), att.cols())?;
    let mut t = Tape::new();
    let (hv, wv, av) = (t.leaf(h.clone()), t.leaf(w.clone()), t.leaf(att.clone()));
    let out_width = if concat { w.cols() } else { w.cols() / heads };
    let bv = bias_leaf(&mut t, b, out_width)?;
    let out = gat(&mut t, g, hv, wv, av, bv, concat, None);
    Ok(t.value(out).clone())
}

/// Matrices of a SAGE layer.
#[derive(Debug, Clone)]
pub struct SageParams {
    pub w: Matrix,
    pub b: Option<Matrix>,
    pub pool_w: Option<Matrix>,
    pub pool_b: Option<Matrix>,
    pub lstm_wi: Option<Matrix>,
    pub lstm_wh: Option<Matrix>,
    pub lstm_b: Option<Matrix>,
}

/// Evaluates a SAGE layer on plain matrices.
pub fn sage_layer(g: &GraphInput, h: &Matrix, p: &SageParams, agg: Aggregator) -> Result<Matrix> {
    let d = h.cols();
    check("layer input rows", g.node_count(), h.rows())?;
    let w_in = if agg == Aggregator::Gcn { d } else { 2 * d };
    check("sage weight rows", w_in, p.w.rows())?;
    let mut t = Tape::new();
    let hv = t.leaf(h.clone());
    let w = t.leaf(p.w.clone());
    let b = bias_leaf(&mut t, p.b.as_ref(), p.w.cols())?;
    let missing = || NnError::InvalidConfig(format!("missing {agg} aggregator parameters"));
    let pool = match agg {
        Aggregator::Pool => {
            let (pw, pb) = (
                p.pool_w.clone().ok_or_else(missing)?,
                p.pool_b.clone().ok_or_else(missing)?,
            );
            check("pool weight rows", d, pw.rows())?;
            check("pool width", d, pw.cols())?;
            Some((t.leaf(pw), t.leaf(pb)))
        }
        _ => None,
    };
    let lstm = match agg {
        Aggregator::Lstm => {
            let wi = p.lstm_wi.clone().ok_or_else(missing)?;
            let wh = p.lstm_wh.clone().ok_or_else(missing)?;
            let b = p.lstm_b.clone().ok_or_else(missing)?;
            check("lstm input rows", d, wi.rows())?;
            check("lstm gate width", 4 * d, wi.cols())?;
            Some((t.leaf(wi), t.leaf(wh), t.leaf(b)))
        }
        _ => None,
    };
    let out = sage(&mut t, g, hv, agg, &SageVars { w, b, pool, lstm });
    Ok(t.value(out).clone())
}

/// Evaluates a GIN layer on plain matrices.
pub fn gin_layer(
    g: &GraphInput,
    h: &Matrix,
    eps: f64,
    w1: &Matrix,
    b1: &Matrix,
    w2: &Matrix,
    b2: &Matrix,
) -> Result<Matrix> {
    check_input(g, h, w1.rows())?;
    check("gin hidden width", w1.cols(), w2.rows())?;
    let mut t = Tape::new();
    let hv = t.leaf(h.clone());
    let e = t.leaf(Matrix::filled(1, 1, eps));
    let (a, b, c, d) = (
        t.leaf(w1.clone()),
        t.leaf(b1.clone()),
        t.leaf(w2.clone()),
        t.leaf(b2.clone()),
    );
    let out = gin(&mut t, g, hv, e, a, b, c, d);
    Ok(t.value(out).clone())
}
