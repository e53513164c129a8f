#![allow(dead_code)]

pub mod suites;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seamgnn_core::dual::mesh_to_dual;
use seamgnn_core::linalg::Matrix;
use seamgnn_core::{shapes, Mesh};
use seamgnn_nn::GraphInput;

pub type Dense = Vec<Vec<f64>>;

/// A graph under test plus an adjacency built without the library's
/// neighbour lists.
pub struct Case {
    pub graph: GraphInput,
    pub adj: Vec<Vec<bool>>,
}

impl Case {
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn nbrs(&self, v: usize) -> Vec<usize> {
        (0..self.n()).filter(|&u| self.adj[v][u]).collect()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    )
}

pub fn to_dense(m: &Matrix) -> Dense {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

/// Connected patch of `1..=max_faces` faces grown from a random face of a
/// level-1 icosphere.
fn random_patch(rng: &mut ChaCha8Rng, max_faces: usize) -> Mesh {
    let sphere = shapes::icosphere(1);
    let target = rng.random_range(1..=max_faces);
    let mut keep = vec![false; sphere.face_count()];
    let start = rng.random_range(0..sphere.face_count());
    keep[start] = true;
    let mut frontier = vec![start];
    let mut count = 1;
    while count < target {
        let f = frontier[rng.random_range(0..frontier.len())];
        let e = sphere.face_edges(f)[rng.random_range(0..3)];
        let (a, b) = sphere.edge_faces(e);
        let g = if a == f { b } else { Some(a) };
        if let Some(g) = g {
            if !keep[g] {
                keep[g] = true;
                frontier.push(g);
                count += 1;
            }
        }
    }
    shapes::submesh(&sphere, |f| keep[f], "patch")
}

/// Dual graph of a random mesh patch with random features; at most
/// `max_nodes` nodes.
pub fn dual_case(rng: &mut ChaCha8Rng, max_nodes: usize, augmented: bool, width: usize) -> Case {
    loop {
        let mesh = random_patch(rng, 12);
        let copies = if augmented { 2 } else { 1 };
        let n = mesh.edge_count() * copies;
        if n > max_nodes {
            continue;
        }
        let dual = mesh_to_dual(&mesh, augmented).unwrap();
        let graph = GraphInput::from_dual(&dual).with_features(random_matrix(rng, n, width));
        let edges = mesh.edges();
        let adj = (0..n)
            .map(|d| {
                (0..n)
                    .map(|o| {
                        let (ed, eo) = (edges[d / copies], edges[o / copies]);
                        d != o && (d / copies == o / copies || ed.iter().any(|x| eo.contains(x)))
                    })
                    .collect()
            })
            .collect();
        return Case { graph, adj };
    }
}

/// Erdős–Rényi graph, possibly with isolated nodes.
pub fn random_case(rng: &mut ChaCha8Rng, max_nodes: usize, width: usize) -> Case {
    let n = rng.random_range(1..=max_nodes);
    let p = rng.random_range(0.05..0.5);
    let mut adj = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                adj[i][j] = true;
                adj[j][i] = true;
            }
        }
    }
    let nbrs = (0..n)
        .map(|v| (0..n).filter(|&u| adj[v][u]).collect())
        .collect();
    Case {
        graph: GraphInput::from_neighbors(random_matrix(rng, n, width), nbrs),
        adj,
    }
}

/// Half dual-graph cases, half Erdős–Rényi.
pub fn mixed_case(rng: &mut ChaCha8Rng, i: usize, max_nodes: usize, width: usize) -> Case {
    match i % 3 {
        0 => dual_case(rng, max_nodes, false, width),
        1 => dual_case(rng, max_nodes, true, width),
        _ => random_case(rng, max_nodes, width),
    }
}

// Dense reference implementations.

pub fn mm(a: &Dense, b: &Dense) -> Dense {
    let m = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..m)
                .map(|j| row.iter().zip(b).map(|(x, br)| x * br[j]).sum())
                .collect()
        })
        .collect()
}

pub fn map(a: &Dense, f: impl Fn(f64) -> f64) -> Dense {
    a.iter()
        .map(|r| r.iter().map(|&x| f(x)).collect())
        .collect()
}

pub fn relu(a: &Dense) -> Dense {
    map(a, |x| x.max(0.0))
}

pub fn elu(a: &Dense) -> Dense {
    map(a, |x| if x > 0.0 { x } else { x.exp() - 1.0 })
}

pub fn add_bias(a: &Dense, b: &[f64]) -> Dense {
    a.iter()
        .map(|r| r.iter().zip(b).map(|(x, y)| x + y).collect())
        .collect()
}

pub fn hcat(a: &Dense, b: &Dense) -> Dense {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().chain(y).copied().collect())
        .collect()
}

pub fn max_diff(a: &Dense, b: &Matrix) -> f64 {
    assert_eq!(a.len(), b.rows());
    let mut d: f64 = 0.0;
    for (r, row) in a.iter().enumerate() {
        assert_eq!(row.len(), b.cols());
        for (c, &x) in row.iter().enumerate() {
            d = d.max((x - b.get(r, c)).abs());
        }
    }
    d
}

pub fn oracle_gcn(case: &Case, h: &Dense, w: &Dense, b: &[f64]) -> Dense {
    let n = case.n();
    let deg: Vec<f64> = (0..n).map(|v| 1.0 + case.nbrs(v).len() as f64).collect();
    let a_hat: Dense = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let a = if i == j || case.adj[i][j] { 1.0 } else { 0.0 };
                    a / (deg[i] * deg[j]).sqrt()
                })
                .collect()
        })
        .collect();
    relu(&add_bias(&mm(&mm(&a_hat, h), w), b))
}

pub fn oracle_gat(
    case: &Case,
    h: &Dense,
    w: &Dense,
    att: &Dense,
    b: &[f64],
    concat: bool,
) -> Dense {
    let heads = att.len();
    let width = att[0].len() / 2;
    let z = mm(h, w);
    let n = case.n();
    let out_w = if concat { heads * width } else { width };
    let mut out = vec![vec![0.0; out_w]; n];
    for v in 0..n {
        let mut hood = case.nbrs(v);
        hood.push(v);
        for hd in 0..heads {
            let zh = |u: usize| &z[u][hd * width..(hd + 1) * width];
            let score = |u: usize| {
                let mut s = 0.0;
                for t in 0..width {
                    s += att[hd][t] * zh(v)[t] + att[hd][width + t] * zh(u)[t];
                }
                if s > 0.0 {
                    s
                } else {
                    0.2 * s
                }
            };
            let scores: Vec<f64> = hood.iter().map(|&u| score(u)).collect();
            let denom: f64 = scores.iter().map(|s| s.exp()).sum();
            for (k, &u) in hood.iter().enumerate() {
                let alpha = scores[k].exp() / denom;
                for t in 0..width {
                    let c = if concat { hd * width + t } else { t };
                    let contrib = alpha * zh(u)[t];
                    out[v][c] += if concat {
                        contrib
                    } else {
                        contrib / heads as f64
                    };
                }
            }
        }
    }
    elu(&add_bias(&out, b))
}

fn neighbour_mean(case: &Case, h: &Dense, include_self: bool) -> Dense {
    let d = h[0].len();
    (0..case.n())
        .map(|v| {
            let mut hood = case.nbrs(v);
            if include_self {
                hood.push(v);
            }
            let mut m = vec![0.0; d];
            for &u in &hood {
                for t in 0..d {
                    m[t] += h[u][t];
                }
            }
            if !hood.is_empty() {
                m.iter_mut().for_each(|x| *x /= hood.len() as f64);
            }
            m
        })
        .collect()
}

pub fn oracle_sage_mean(case: &Case, h: &Dense, w: &Dense, b: &[f64]) -> Dense {
    relu(&add_bias(
        &mm(&hcat(h, &neighbour_mean(case, h, false)), w),
        b,
    ))
}

pub fn oracle_sage_gcn(case: &Case, h: &Dense, w: &Dense, b: &[f64]) -> Dense {
    relu(&add_bias(&mm(&neighbour_mean(case, h, true), w), b))
}

pub fn oracle_sage_pool(
    case: &Case,
    h: &Dense,
    w: &Dense,
    b: &[f64],
    pw: &Dense,
    pb: &[f64],
) -> Dense {
    let a = relu(&add_bias(&mm(h, pw), pb));
    let d = a[0].len();
    let agg: Dense = (0..case.n())
        .map(|v| {
            let hood = case.nbrs(v);
            (0..d)
                .map(|t| {
                    hood.iter()
                        .map(|&u| a[u][t])
                        .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))))
                        .unwrap_or(0.0)
                })
                .collect()
        })
        .collect();
    relu(&add_bias(&mm(&hcat(h, &agg), w), b))
}

pub fn oracle_sage_lstm(
    case: &Case,
    h: &Dense,
    w: &Dense,
    wb: &[f64],
    wi: &Dense,
    wh: &Dense,
    b: &[f64],
) -> Dense {
    let d = h[0].len();
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    let agg: Dense = (0..case.n())
        .map(|v| {
            let mut hs = vec![0.0; d];
            let mut cs = vec![0.0; d];
            for u in case.nbrs(v) {
                let g: Vec<f64> = (0..4 * d)
                    .map(|j| {
                        b[j] + (0..d)
                            .map(|k| h[u][k] * wi[k][j] + hs[k] * wh[k][j])
                            .sum::<f64>()
                    })
                    .collect();
                for t in 0..d {
                    let (i, f, c, o) = (
                        sig(g[t]),
                        sig(g[d + t]),
                        g[2 * d + t].tanh(),
                        sig(g[3 * d + t]),
                    );
                    cs[t] = f * cs[t] + i * c;
                    hs[t] = o * cs[t].tanh();
                }
            }
            hs
        })
        .collect();
    relu(&add_bias(&mm(&hcat(h, &agg), w), wb))
}

#[allow(clippy::too_many_arguments)]
pub fn oracle_gin(
    case: &Case,
    h: &Dense,
    eps: f64,
    w1: &Dense,
    b1: &[f64],
    w2: &Dense,
    b2: &[f64],
) -> Dense {
    let d = h[0].len();
    let x: Dense = (0..case.n())
        .map(|v| {
            (0..d)
                .map(|t| (1.0 + eps) * h[v][t] + case.nbrs(v).iter().map(|&u| h[u][t]).sum::<f64>())
                .collect()
        })
        .collect();
    let y = relu(&add_bias(&mm(&x, w1), b1));
    relu(&add_bias(&mm(&y, w2), b2))
}
