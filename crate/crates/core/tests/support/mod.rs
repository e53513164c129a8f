//! Independent oracles and fixtures shared by the integration suites.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seamgnn_core::geom;
use seamgnn_core::mesh::Uv;
use seamgnn_core::unwrap::UvAtlas;
use seamgnn_core::{shapes, Mesh, SeamLabels};

pub type WeightedEdges = Vec<(usize, usize, f64)>;

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) -> bool {
    let (ra, rb) = (find(parent, a), find(parent, b));
    parent[ra] = rb;
    ra != rb
}

/// Kruskal cost over the subgraph induced by `members`, if it is connected.
fn mst_cost(n: usize, edges: &[(usize, usize, f64)], members: &[bool]) -> Option<f64> {
    let mut list: Vec<_> = edges
        .iter()
        .filter(|e| members[e.0] && members[e.1])
        .collect();
    list.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut parent: Vec<usize> = (0..n).collect();
    let (mut cost, mut joined) = (0.0, 0);
    for &&(a, b, w) in &list {
        if union(&mut parent, a, b) {
            cost += w;
            joined += 1;
        }
    }
    (joined + 1 == members.iter().filter(|&&m| m).count()).then_some(cost)
}

/// Optimal Steiner tree cost: the cheapest MST over terminals plus any
/// subset of the other vertices.
pub fn exhaustive_steiner(n: usize, edges: &[(usize, usize, f64)], terminals: &[usize]) -> f64 {
    let others: Vec<usize> = (0..n).filter(|v| !terminals.contains(v)).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << others.len()) {
        let mut members = vec![false; n];
        for &t in terminals {
            members[t] = true;
        }
        for (i, &v) in others.iter().enumerate() {
            members[v] |= mask & (1 << i) != 0;
        }
        if let Some(c) = mst_cost(n, edges, &members) {
            best = best.min(c);
        }
    }
    best
}

/// Connected graph on 3..=max_n vertices: a random spanning tree plus
/// extra edges, weights in [0.05, 1).
pub fn random_connected(rng: &mut ChaCha8Rng, max_n: usize) -> (usize, WeightedEdges) {
    let n = rng.random_range(3..=max_n);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v, rng.random_range(0.05..1.0)));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.3)
                && !edges
                    .iter()
                    .any(|e| (e.0, e.1) == (a, b) || (e.0, e.1) == (b, a))
            {
                edges.push((a, b, rng.random_range(0.05..1.0)));
            }
        }
    }
    (n, edges)
}

pub fn random_terminals(rng: &mut ChaCha8Rng, n: usize, max_k: usize) -> Vec<usize> {
    let k = rng.random_range(2..=max_k.min(n));
    let mut all: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        all.swap(i, j);
    }
    all.truncate(k);
    all
}

/// True if `tree` (edge positions) is acyclic and joins all terminals.
pub fn is_spanning_tree(
    n: usize,
    edges: &[(usize, usize, f64)],
    tree: &[usize],
    terminals: &[usize],
) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    for &k in tree {
        if !union(&mut parent, edges[k].0, edges[k].1) {
            return false;
        }
    }
    let root = find(&mut parent, terminals[0]);
    terminals.iter().all(|&t| find(&mut parent, t) == root)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Faces with non-positive signed UV area.
pub fn flipped(mesh: &Mesh, uvs: &[Uv]) -> usize {
    mesh.faces()
        .iter()
        .filter(|f| geom::signed_area_2d(uvs[f[0]], uvs[f[1]], uvs[f[2]]) <= 0.0)
        .count()
}

/// Max distance of an interior vertex from the mean of its neighbours.
pub fn laplacian_residual(mesh: &Mesh, uvs: &[Uv]) -> f64 {
    let boundary = mesh.boundary_vertices();
    let mut worst: f64 = 0.0;
    for v in (0..mesh.vertex_count()).filter(|&v| !boundary[v]) {
        let nb: Vec<usize> = mesh
            .edges()
            .iter()
            .filter_map(|&[a, b]| match (a == v, b == v) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect();
        let k = nb.len() as f64;
        let mean = [0, 1].map(|c| nb.iter().map(|&u| uvs[u][c]).sum::<f64>() / k);
        worst = worst.max((uvs[v][0] - mean[0]).hypot(uvs[v][1] - mean[1]));
    }
    worst
}

/// Total scaled UV area and total 3D area of an atlas.
pub fn atlas_areas(mesh: &Mesh, atlas: &UvAtlas) -> (f64, f64) {
    let uvs = atlas.corner_uvs(mesh.face_count());
    let uv: f64 = uvs
        .iter()
        .map(|c| geom::signed_area_2d(c[0], c[1], c[2]).abs())
        .sum();
    let area: f64 = (0..mesh.face_count())
        .map(|f| {
            let [a, b, c] = mesh.face_positions(f);
            let cr = geom::cross(geom::sub(b, a), geom::sub(c, a));
            0.5 * geom::norm(cr)
        })
        .sum();
    (uv, area)
}

/// Equator vertices of `icosphere_with_equator` in loop order.
pub fn ordered_ring(m: &Mesh, eq: &SeamLabels) -> Vec<usize> {
    let edges: Vec<[usize; 2]> = eq.seam_edges().map(|e| m.edges()[e]).collect();
    let mut ring = vec![edges[0][0], edges[0][1]];
    while ring.len() < edges.len() {
        let (last, prev) = (ring[ring.len() - 1], ring[ring.len() - 2]);
        let next = edges
            .iter()
            .find_map(|&[a, b]| {
                if a == last && b != prev {
                    Some(b)
                } else if b == last && a != prev {
                    Some(a)
                } else {
                    None
                }
            })
            .expect("equator is a loop");
        ring.push(next);
    }
    ring
}

/// Level-2 icosphere equator with two adjacent edges removed.
pub fn equator_with_gap() -> (Mesh, SeamLabels) {
    let (m, eq) = shapes::icosphere_with_equator(2);
    let ring = ordered_ring(&m, &eq);
    let mut labels = eq;
    labels.set(m.edge_index(ring[0], ring[1]).unwrap(), false);
    labels.set(m.edge_index(ring[1], ring[2]).unwrap(), false);
    (m, labels)
}

pub fn indicator(labels: &SeamLabels) -> Vec<f64> {
    labels
        .as_slice()
        .iter()
        .map(|&b| if b { 1.0 } else { 0.0 })
        .collect()
}

/// 12 × 6 grid whose vertex rows 2 and 3 form a two-vertex-wide band of
/// high probability; returns the mesh, edge probabilities and band size.
pub fn two_wide_strip() -> (Mesh, Vec<f64>, usize) {
    let m = shapes::grid(12, 6, 1.0);
    let hot = |v: usize| matches!(v / 13, 2 | 3);
    let probs = m
        .edges()
        .iter()
        .map(|&[a, b]| match (hot(a), hot(b)) {
            (true, true) => 0.9 + 0.001 * ((a * 7 + b * 3) % 50) as f64,
            (true, false) | (false, true) => 0.3,
            _ => 0.05,
        })
        .collect();
    (m, probs, 26)
}

/// Rotation about an arbitrary axis plus translation.
pub fn rigid(mesh: &Mesh, angle: f64, shift: [f64; 3]) -> Mesh {
    let (s, c) = angle.sin_cos();
    let verts = mesh
        .vertices()
        .iter()
        .map(|p| {
            let r = [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]];
            let r = [r[0], c * r[1] - s * r[2], s * r[1] + c * r[2]];
            geom::add(r, shift)
        })
        .collect();
    mesh.with_positions(verts).unwrap()
}
