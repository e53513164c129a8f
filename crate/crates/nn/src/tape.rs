//! Reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records every operation of one forward pass; [`Tape::backward`]
//! walks it in reverse. Graph aggregations that would be awkward to express
//! with dense primitives (attention, neighbour max, weighted cross-entropy)
//! are single fused operations with hand-written adjoints.

use std::rc::Rc;

use seamgnn_core::linalg::{Csr, Matrix};

/// Handle to a value on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// A constant sparse operator together with its transpose.
#[derive(Debug)]
pub struct SparseOp {
    pub forward: Csr,
    pub transpose: Csr,
}

impl SparseOp {
    pub fn new(forward: Csr) -> Self {
        let transpose = forward.transpose();
        Self { forward, transpose }
    }
}

/// Saved state of a multi-head attention aggregation.
#[derive(Debug)]
pub struct Attention {
    /// Neighbour lists including the node itself.
    pub neighbors: Rc<Vec<Vec<usize>>>,
    pub heads: usize,
    pub width: usize,
    /// Concatenate heads (true) or average them.
    pub concat: bool,
    pub slope: f64,
    /// Softmax weights per node, per head, per neighbour slot.
    alpha: Vec<Vec<f64>>,
    /// Pre-activation scores, same layout as `alpha`.
    raw: Vec<Vec<f64>>,
    /// Dropout multipliers, same layout, absent at inference.
    mask: Option<Vec<Vec<f64>>>,
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    SpMM(Rc<SparseOp>, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    ScalarMul(Var, Var),
    Mul(Var, Var),
    Relu(Var),
    Elu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Concat(Var, Var),
    Cols(Var, usize),
    Gather(Var, Rc<Vec<usize>>),
    Blend(Rc<Vec<f64>>, Var, Var),
    NeighborMax(Var, Vec<usize>),
    Attention(Var, Var, Box<Attention>),
    WeightedCe(Var, Rc<Vec<usize>>, Rc<Vec<f64>>, Matrix),
}

struct Node {
    value: Matrix,
    op: Op,
}

/// Gradients of a scalar with respect to every tape value.
pub struct Gradients(Vec<Option<Matrix>>);

impl Gradients {
    /// Gradient for `v`, or `None` when the scalar does not depend on it.
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.0[v.0].as_ref()
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn zip_map(a: &Matrix, b: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
    assert_eq!(a.shape(), b.shape(), "elementwise shape mismatch");
    Matrix::from_vec(
        a.rows(),
        a.cols(),
        a.data()
            .iter()
            .zip(b.data())
            .map(|(&x, &y)| f(x, y))
            .collect(),
    )
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// A constant or parameter.
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn spmm(&mut self, s: &Rc<SparseOp>, x: Var) -> Var {
        let v = s.forward.matmul(self.value(x));
        self.push(v, Op::SpMM(Rc::clone(s), x))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = zip_map(self.value(a), self.value(b), |x, y| x + y);
        self.push(v, Op::Add(a, b))
    }

    /// `x + 1·bias` for a `1 × cols` bias.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Var {
        let (xm, bm) = (self.value(x), self.value(bias));
        assert_eq!((1, xm.cols()), bm.shape(), "bias shape mismatch");
        let mut v = xm.clone();
        for r in 0..v.rows() {
            for (o, &b) in v.row_mut(r).iter_mut().zip(bm.data()) {
                *o += b;
            }
        }
        self.push(v, Op::AddRow(x, bias))
    }

    /// `s · x` for a `1 × 1` scalar `s`.
    pub fn scalar_mul(&mut self, s: Var, x: Var) -> Var {
        assert_eq!(self.value(s).shape(), (1, 1), "scalar must be 1 × 1");
        let v = self.value(x).scale(self.value(s).data()[0]);
        self.push(v, Op::ScalarMul(s, x))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = zip_map(self.value(a), self.value(b), |x, y| x * y);
        self.push(v, Op::Mul(a, b))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let v = self.value(x).map(|t| t.max(0.0));
        self.push(v, Op::Relu(x))
    }

    pub fn elu(&mut self, x: Var) -> Var {
        let v = self.value(x).map(elu);
        self.push(v, Op::Elu(x))
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let v = self.value(x).map(sigmoid);
        self.push(v, Op::Sigmoid(x))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let v = self.value(x).map(f64::tanh);
        self.push(v, Op::Tanh(x))
    }

    /// Column-wise concatenation `[a ‖ b]`.
    pub fn concat(&mut self, a: Var, b: Var) -> Var {
        let (am, bm) = (self.value(a), self.value(b));
        assert_eq!(am.rows(), bm.rows(), "concat row mismatch");
        let mut data = Vec::with_capacity(am.rows() * (am.cols() + bm.cols()));
        for r in 0..am.rows() {
            data.extend_from_slice(am.row(r));
            data.extend_from_slice(bm.row(r));
        }
        let v = Matrix::from_vec(am.rows(), am.cols() + bm.cols(), data);
        self.push(v, Op::Concat(a, b))
    }

    /// Columns `start .. start + len`.
    pub fn cols(&mut self, x: Var, start: usize, len: usize) -> Var {
        let xm = self.value(x);
        assert!(start + len <= xm.cols(), "column range out of bounds");
        let mut data = Vec::with_capacity(xm.rows() * len);
        for r in 0..xm.rows() {
            data.extend_from_slice(&xm.row(r)[start..start + len]);
        }
        let v = Matrix::from_vec(xm.rows(), len, data);
        self.push(v, Op::Cols(x, start))
    }

    /// Row `i` of the output is row `idx[i]` of `x`.
    pub fn gather(&mut self, x: Var, idx: Rc<Vec<usize>>) -> Var {
        let xm = self.value(x);
        let mut data = Vec::with_capacity(idx.len() * xm.cols());
        for &i in idx.iter() {
            data.extend_from_slice(xm.row(i));
        }
        let v = Matrix::from_vec(idx.len(), xm.cols(), data);
        self.push(v, Op::Gather(x, idx))
    }

    /// Row-wise `m·a + (1 − m)·b` for a constant per-row mask `m`.
    pub fn blend(&mut self, mask: Rc<Vec<f64>>, a: Var, b: Var) -> Var {
        let (am, bm) = (self.value(a), self.value(b));
        assert_eq!(am.shape(), bm.shape(), "blend shape mismatch");
        assert_eq!(mask.len(), am.rows(), "blend mask length mismatch");
        let mut v = am.clone();
        for r in 0..v.rows() {
            let m = mask[r];
            for (o, &y) in v.row_mut(r).iter_mut().zip(bm.row(r)) {
                *o = m * *o + (1.0 - m) * y;
            }
        }
        self.push(v, Op::Blend(mask, a, b))
    }

    /// Elementwise maximum over each node's neighbour rows; zero for nodes
    /// without neighbours. Ties go to the lowest neighbour index.
    pub fn neighbor_max(&mut self, x: Var, neighbors: &[Vec<usize>]) -> Var {
        let xm = self.value(x);
        let (n, f) = (neighbors.len(), xm.cols());
        let mut v = Matrix::zeros(n, f);
        let mut arg = vec![usize::MAX; n * f];
        for (i, nbrs) in neighbors.iter().enumerate() {
            for &u in nbrs {
                let row = xm.row(u);
                for c in 0..f {
                    let slot = i * f + c;
                    if arg[slot] == usize::MAX || row[c] > v.get(i, c) {
                        v.set(i, c, row[c]);
                        arg[slot] = u;
                    }
                }
            }
        }
        self.push(v, Op::NeighborMax(x, arg))
    }

    /// Multi-head graph attention over projected features `z`
    /// (`n × heads·width`) with per-head vectors `att` (`heads × 2·width`).
    ///
    /// For head `h`: `e_vu = LeakyReLU(a_h[..w]·z_v + a_h[w..]·z_u)` over
    /// `u ∈ neighbors[v]`, `α = softmax_u(e)`, output `Σ_u α_vu z_u`.
    /// `dropout` supplies per-coefficient keep multipliers during training.
    #[allow(clippy::too_many_arguments)]
    pub fn attention(
        &mut self,
        z: Var,
        att: Var,
        neighbors: Rc<Vec<Vec<usize>>>,
        heads: usize,
        concat: bool,
        slope: f64,
        mut dropout: Option<&mut dyn FnMut() -> f64>,
    ) -> Var {
        let (zm, am) = (self.value(z), self.value(att));
        let n = neighbors.len();
        assert_eq!(zm.rows(), n, "attention row mismatch");
        assert_eq!(
            zm.cols() % heads,
            0,
            "attention width not divisible by heads"
        );
        let width = zm.cols() / heads;
        assert_eq!(
            am.shape(),
            (heads, 2 * width),
            "attention vector shape mismatch"
        );

        let out_cols = if concat { heads * width } else { width };
        let mut out = Matrix::zeros(n, out_cols);
        let mut alpha = Vec::with_capacity(n);
        let mut raw = Vec::with_capacity(n);
        let mut mask = dropout.as_ref().map(|_| Vec::with_capacity(n));
        // Per-node source and target scores, per head.
        let mut src = vec![0.0; n * heads];
        let mut dst = vec![0.0; n * heads];
        for v in 0..n {
            for h in 0..heads {
                let zh = &zm.row(v)[h * width..(h + 1) * width];
                let a = am.row(h);
                src[v * heads + h] = seamgnn_core::linalg::dot(&a[..width], zh);
                dst[v * heads + h] = seamgnn_core::linalg::dot(&a[width..], zh);
            }
        }
        let scale = if concat { 1.0 } else { 1.0 / heads as f64 };
        for v in 0..n {
            let nbrs = &neighbors[v];
            let k = nbrs.len();
            let mut a_v = vec![0.0; heads * k];
            let mut r_v = vec![0.0; heads * k];
            let mut m_v = vec![1.0; heads * k];
            for h in 0..heads {
                let mut max = f64::NEG_INFINITY;
                for (j, &u) in nbrs.iter().enumerate() {
                    let e = src[v * heads + h] + dst[u * heads + h];
                    r_v[h * k + j] = e;
                    let s = if e > 0.0 { e } else { slope * e };
                    a_v[h * k + j] = s;
                    max = max.max(s);
                }
                let mut sum = 0.0;
                for j in 0..k {
                    let ex = (a_v[h * k + j] - max).exp();
                    a_v[h * k + j] = ex;
                    sum += ex;
                }
                for j in 0..k {
                    a_v[h * k + j] /= sum;
                }
                if let Some(draw) = dropout.as_mut() {
                    for j in 0..k {
                        m_v[h * k + j] = draw();
                    }
                }
                let col0 = if concat { h * width } else { 0 };
                for (j, &u) in nbrs.iter().enumerate() {
                    let w = a_v[h * k + j] * m_v[h * k + j] * scale;
                    if w == 0.0 {
                        continue;
                    }
                    let zu = &zm.row(u)[h * width..(h + 1) * width];
                    let orow = &mut out.row_mut(v)[col0..col0 + width];
                    for (o, &x) in orow.iter_mut().zip(zu) {
                        *o += w * x;
                    }
                }
            }
            alpha.push(a_v);
            raw.push(r_v);
            if let Some(m) = mask.as_mut() {
                m.push(m_v);
            }
        }
        let cache = Attention {
            neighbors,
            heads,
            width,
            concat,
            slope,
            alpha,
            raw,
            mask,
        };
        self.push(out, Op::Attention(z, att, Box::new(cache)))
    }

    /// Mean over rows of `w[labels[i]] ·` −log softmax(logits_i)[labels[i]],
    /// with per-row weights. Produces a `1 × 1` value.
    pub fn weighted_ce(
        &mut self,
        logits: Var,
        labels: Rc<Vec<usize>>,
        weights: Rc<Vec<f64>>,
    ) -> Var {
        let lm = self.value(logits);
        assert_eq!(lm.rows(), labels.len(), "label count mismatch");
        assert_eq!(lm.rows(), weights.len(), "weight count mismatch");
        let n = lm.rows().max(1) as f64;
        let mut probs = Matrix::zeros(lm.rows(), lm.cols());
        let mut total = 0.0;
        for r in 0..lm.rows() {
            let row = lm.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
            for (c, &x) in row.iter().enumerate() {
                probs.set(r, c, (x - lse).exp());
            }
            total += weights[r] * (lse - row[labels[r]]);
        }
        let v = Matrix::from_vec(1, 1, vec![total / n]);
        self.push(v, Op::WeightedCe(logits, labels, weights, probs))
    }

    /// Gradients of the `1 × 1` value `out` with respect to every value on
    /// the tape.
    pub fn backward(&self, out: Var) -> Gradients {
        assert_eq!(self.value(out).shape(), (1, 1), "backward needs a scalar");
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out.0] = Some(Matrix::filled(1, 1, 1.0));
        for i in (0..=out.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Gradients(grads)
    }

    fn propagate(&self, i: usize, g: &Matrix, grads: &mut [Option<Matrix>]) {
        let acc = |grads: &mut [Option<Matrix>], v: Var, d: Matrix| match &mut grads[v.0] {
            Some(existing) => existing.add_assign(&d),
            slot => *slot = Some(d),
        };
        let node = &self.nodes[i];
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                acc(grads, *a, g.matmul_t(self.value(*b)));
                acc(grads, *b, self.value(*a).t_matmul(g));
            }
            Op::SpMM(s, x) => acc(grads, *x, s.transpose.matmul(g)),
            Op::Add(a, b) => {
                acc(grads, *a, g.clone());
                acc(grads, *b, g.clone());
            }
            Op::AddRow(x, bias) => {
                acc(grads, *x, g.clone());
                let mut db = Matrix::zeros(1, g.cols());
                for r in 0..g.rows() {
                    for (o, &d) in db.data_mut().iter_mut().zip(g.row(r)) {
                        *o += d;
                    }
                }
                acc(grads, *bias, db);
            }
            Op::ScalarMul(s, x) => {
                let sv = self.value(*s).data()[0];
                let ds = seamgnn_core::linalg::dot(g.data(), self.value(*x).data());
                acc(grads, *s, Matrix::filled(1, 1, ds));
                acc(grads, *x, g.scale(sv));
            }
            Op::Mul(a, b) => {
                acc(grads, *a, zip_map(g, self.value(*b), |d, y| d * y));
                acc(grads, *b, zip_map(g, self.value(*a), |d, x| d * x));
            }
            Op::Relu(x) => acc(
                grads,
                *x,
                zip_map(g, &node.value, |d, y| if y > 0.0 { d } else { 0.0 }),
            ),
            Op::Elu(x) => acc(
                grads,
                *x,
                zip_map(
                    g,
                    self.value(*x),
                    |d, t| if t > 0.0 { d } else { d * t.exp() },
                ),
            ),
            Op::Sigmoid(x) => acc(grads, *x, zip_map(g, &node.value, |d, y| d * y * (1.0 - y))),
            Op::Tanh(x) => acc(grads, *x, zip_map(g, &node.value, |d, y| d * (1.0 - y * y))),
            Op::Concat(a, b) => {
                let ca = self.value(*a).cols();
                let cb = self.value(*b).cols();
                let mut da = Vec::with_capacity(g.rows() * ca);
                let mut db = Vec::with_capacity(g.rows() * cb);
                for r in 0..g.rows() {
                    da.extend_from_slice(&g.row(r)[..ca]);
                    db.extend_from_slice(&g.row(r)[ca..]);
                }
                acc(grads, *a, Matrix::from_vec(g.rows(), ca, da));
                acc(grads, *b, Matrix::from_vec(g.rows(), cb, db));
            }
            Op::Cols(x, start) => {
                let xm = self.value(*x);
                let mut dx = Matrix::zeros(xm.rows(), xm.cols());
                for r in 0..g.rows() {
                    dx.row_mut(r)[*start..*start + g.cols()].copy_from_slice(g.row(r));
                }
                acc(grads, *x, dx);
            }
            Op::Gather(x, idx) => {
                let xm = self.value(*x);
                let mut dx = Matrix::zeros(xm.rows(), xm.cols());
                for (r, &src) in idx.iter().enumerate() {
                    for (o, &d) in dx.row_mut(src).iter_mut().zip(g.row(r)) {
                        *o += d;
                    }
                }
                acc(grads, *x, dx);
            }
            Op::Blend(mask, a, b) => {
                let mut da = g.clone();
                let mut db = g.clone();
                for r in 0..g.rows() {
                    let m = mask[r];
                    da.row_mut(r).iter_mut().for_each(|d| *d *= m);
                    db.row_mut(r).iter_mut().for_each(|d| *d *= 1.0 - m);
                }
                acc(grads, *a, da);
                acc(grads, *b, db);
            }
            Op::NeighborMax(x, arg) => {
                let xm = self.value(*x);
                let f = g.cols();
                let mut dx = Matrix::zeros(xm.rows(), xm.cols());
                for r in 0..g.rows() {
                    for c in 0..f {
                        let u = arg[r * f + c];
                        if u != usize::MAX {
                            let cur = dx.get(u, c);
                            dx.set(u, c, cur + g.get(r, c));
                        }
                    }
                }
                acc(grads, *x, dx);
            }
            Op::Attention(z, att, cache) => {
                let (dz, da) = self.attention_backward(*z, *att, cache, g);
                acc(grads, *z, dz);
                acc(grads, *att, da);
            }
            Op::WeightedCe(logits, labels, weights, probs) => {
                let n = probs.rows().max(1) as f64;
                let scale = g.data()[0] / n;
                let mut d = probs.clone();
                for r in 0..d.rows() {
                    let w = weights[r] * scale;
                    let row = d.row_mut(r);
                    row[labels[r]] -= 1.0;
                    row.iter_mut().for_each(|x| *x *= w);
                }
                acc(grads, *logits, d);
            }
        }
    }

    fn attention_backward(&self, z: Var, att: Var, c: &Attention, g: &Matrix) -> (Matrix, Matrix) {
        let (zm, am) = (self.value(z), self.value(att));
        let (heads, width) = (c.heads, c.width);
        let mut dz = Matrix::zeros(zm.rows(), zm.cols());
        let mut da = Matrix::zeros(am.rows(), am.cols());
        let scale = if c.concat { 1.0 } else { 1.0 / heads as f64 };
        for (v, nbrs) in c.neighbors.iter().enumerate() {
            let k = nbrs.len();
            for h in 0..heads {
                let col0 = if c.concat { h * width } else { 0 };
                let gv: Vec<f64> = g.row(v)[col0..col0 + width]
                    .iter()
                    .map(|x| x * scale)
                    .collect();
                // d(alpha) through the weighted sum, and dz for the summed rows.
                let mut dalpha = vec![0.0; k];
                for (j, &u) in nbrs.iter().enumerate() {
                    let m = c.mask.as_ref().map_or(1.0, |m| m[v][h * k + j]);
                    let a = c.alpha[v][h * k + j];
                    let zu = &zm.row(u)[h * width..(h + 1) * width];
                    dalpha[j] = m * seamgnn_core::linalg::dot(&gv, zu);
                    let w = a * m;
                    if w != 0.0 {
                        let dzu = &mut dz.row_mut(u)[h * width..(h + 1) * width];
                        for (o, &x) in dzu.iter_mut().zip(&gv) {
                            *o += w * x;
                        }
                    }
                }
                let inner: f64 = (0..k).map(|j| c.alpha[v][h * k + j] * dalpha[j]).sum();
                let a_src = am.row(h)[..width].to_vec();
                let a_dst = am.row(h)[width..].to_vec();
                let zv = zm.row(v)[h * width..(h + 1) * width].to_vec();
                for (j, &u) in nbrs.iter().enumerate() {
                    let ds = c.alpha[v][h * k + j] * (dalpha[j] - inner);
                    let e = c.raw[v][h * k + j];
                    let de = if e > 0.0 { ds } else { c.slope * ds };
                    if de == 0.0 {
                        continue;
                    }
                    let zu = zm.row(u)[h * width..(h + 1) * width].to_vec();
                    let darow = da.row_mut(h);
                    for t in 0..width {
                        darow[t] += de * zv[t];
                        darow[width + t] += de * zu[t];
                    }
                    let dzv = &mut dz.row_mut(v)[h * width..(h + 1) * width];
                    for (o, &a) in dzv.iter_mut().zip(&a_src) {
                        *o += de * a;
                    }
                    let dzu = &mut dz.row_mut(u)[h * width..(h + 1) * width];
                    for (o, &a) in dzu.iter_mut().zip(&a_dst) {
                        *o += de * a;
                    }
                }
            }
        }
        (dz, da)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central-difference check of `d f / d leaf` for a scalar-valued builder.
    fn check(build: impl Fn(&mut Tape, Var) -> Var, x0: Matrix) {
        let mut tape = Tape::new();
        let x = tape.leaf(x0.clone());
        let out = build(&mut tape, x);
        let grads = tape.backward(out);
        let g = grads
            .get(x)
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(x0.rows(), x0.cols()));
        let h = 1e-6;
        for i in 0..x0.data().len() {
            let eval = |delta: f64| {
                let mut xm = x0.clone();
                xm.data_mut()[i] += delta;
                let mut t = Tape::new();
                let x = t.leaf(xm);
                let o = build(&mut t, x);
                t.value(o).data()[0]
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let an = g.data()[i];
            assert!(
                (fd - an).abs() <= 1e-6 * (1.0 + fd.abs()),
                "entry {i}: fd {fd} vs {an}"
            );
        }
    }

    fn sum(t: &mut Tape, x: Var) -> Var {
        let (r, c) = t.value(x).shape();
        let ones_r = t.leaf(Matrix::filled(1, r, 1.0));
        let ones_c = t.leaf(Matrix::filled(c, 1, 1.0));
        let s = t.matmul(ones_r, x);
        t.matmul(s, ones_c)
    }

    fn sample(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut s = seed;
        let data = (0..rows * cols)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect();
        Matrix::from_vec(rows, cols, data)
    }

    #[test]
    fn elementwise_gradients() {
        let w = sample(3, 3, 1);
        check(
            |t, x| {
                let wv = t.leaf(w.clone());
                let a = t.matmul(x, wv);
                let b = t.tanh(a);
                let c = t.sigmoid(x);
                let d = t.mul(b, c);
                let e = t.elu(d);
                let f = t.relu(e);
                let g = t.add(f, e);
                sum(t, g)
            },
            sample(4, 3, 2),
        );
    }

    #[test]
    fn structural_gradients() {
        check(
            |t, x| {
                let c = t.concat(x, x);
                let s = t.cols(c, 1, 3);
                let idx = Rc::new(vec![2, 0, 0, 1]);
                let g = t.gather(s, idx);
                let other = t.leaf(sample(4, 3, 9));
                let b = t.blend(Rc::new(vec![1.0, 0.0, 0.5, 0.25]), g, other);
                let sq = t.mul(b, b);
                sum(t, sq)
            },
            sample(3, 4, 3),
        );
    }

    #[test]
    fn scalar_and_bias_gradients() {
        let x0 = sample(3, 2, 5);
        check(
            |t, s| {
                let x = t.leaf(x0.clone());
                let y = t.scalar_mul(s, x);
                let sq = t.mul(y, y);
                sum(t, sq)
            },
            Matrix::filled(1, 1, 0.7),
        );
        check(
            |t, b| {
                let x = t.leaf(x0.clone());
                let y = t.add_row(x, b);
                let z = t.tanh(y);
                sum(t, z)
            },
            sample(1, 2, 6),
        );
    }

    #[test]
    fn sparse_and_max_gradients() {
        let s = Rc::new(SparseOp::new(Csr::from_triplets(
            3,
            3,
            &[(0, 1, 0.5), (1, 0, 2.0), (2, 2, 1.5), (2, 0, -1.0)],
        )));
        let nbrs = vec![vec![1, 2], vec![0], vec![]];
        check(
            |t, x| {
                let y = t.spmm(&s, x);
                let m = t.neighbor_max(y, &nbrs);
                let sq = t.mul(m, m);
                sum(t, sq)
            },
            sample(3, 2, 7),
        );
    }

    #[test]
    fn attention_gradients() {
        let nbrs = Rc::new(vec![vec![0, 1, 2], vec![0, 1], vec![0, 2, 3], vec![2, 3]]);
        for concat in [true, false] {
            let att0 = sample(2, 6, 11);
            check(
                |t, z| {
                    let a = t.leaf(att0.clone());
                    let o = t.attention(z, a, Rc::clone(&nbrs), 2, concat, 0.2, None);
                    let sq = t.mul(o, o);
                    sum(t, sq)
                },
                sample(4, 6, 12),
            );
            let z0 = sample(4, 6, 13);
            check(
                |t, a| {
                    let z = t.leaf(z0.clone());
                    let o = t.attention(z, a, Rc::clone(&nbrs), 2, concat, 0.2, None);
                    let sq = t.mul(o, o);
                    sum(t, sq)
                },
                sample(2, 6, 14),
            );
        }
    }

    #[test]
    fn cross_entropy_value_and_gradient() {
        let mut t = Tape::new();
        let l = t.leaf(Matrix::zeros(1, 2));
        let loss = t.weighted_ce(l, Rc::new(vec![1]), Rc::new(vec![100.0]));
        assert!((t.value(loss).data()[0] - 100.0 * 2f64.ln()).abs() < 1e-12);
        check(
            |t, x| t.weighted_ce(x, Rc::new(vec![0, 1, 1]), Rc::new(vec![1.0, 100.0, 3.0])),
            sample(3, 2, 21),
        );
    }
}
