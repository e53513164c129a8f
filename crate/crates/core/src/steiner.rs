//! Distortion-weighted Steiner tree refinement of seam labels.
//!
//! Each shell gets a tree spanning the vertices touched by seams, found with
//! the metric-closure MST heuristic under weights `l_e = 1 − |D_f1 − D_f2|`.
//! A second pass joins dangling seam endpoints in pairs so that incomplete
//! loops close.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::DisjointSet;
use crate::mesh::{shells_from_labels, Mesh, SeamLabels, ShellPartition};

/// Lower clamp for edge weights, keeping Dijkstra's inputs positive.
pub const MIN_WEIGHT: f64 = 1e-6;

/// `l_e = clamp(1 − |D_f1 − D_f2|, MIN_WEIGHT, 1)` for interior edges and 1
/// for boundary edges.
pub fn edge_weights(mesh: &Mesh, distortion: &[f64]) -> Result<Vec<f64>> {
    if distortion.len() != mesh.face_count() {
        return Err(Error::LengthMismatch {
            what: "face distortion",
            expected: mesh.face_count(),
            actual: distortion.len(),
        });
    }
    Ok((0..mesh.edge_count())
        .map(|e| match mesh.edge_faces(e) {
            (f0, Some(f1)) => edge_weight(distortion[f0], distortion[f1]),
            _ => 1.0,
        })
        .collect())
}

pub fn edge_weight(d1: f64, d2: f64) -> f64 {
    let w = 1.0 - (d1 - d2).abs();
    if w.is_nan() {
        return MIN_WEIGHT;
    }
    w.clamp(MIN_WEIGHT, 1.0)
}

/// Weighted undirected graph over a subset of mesh vertices. Edge ids are
/// mesh edge indices (or caller-chosen ids for abstract graphs).
#[derive(Debug, Clone)]
pub struct ComponentGraph {
    /// Global id of each local vertex, ascending.
    pub vertices: Vec<usize>,
    /// `(local a, local b, weight, edge id)`.
    pub edges: Vec<(usize, usize, f64, usize)>,
    adj: Vec<Vec<(usize, usize)>>,
    local: HashMap<usize, usize>,
}

impl ComponentGraph {
    /// Abstract graph on vertices `0..n`; the edge id is its position.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let vertices = (0..n).collect();
        let edges = edges
            .iter()
            .enumerate()
            .map(|(i, &(a, b, w))| (a, b, w, i))
            .collect();
        Self::build(vertices, edges)
    }

    fn build(vertices: Vec<usize>, edges: Vec<(usize, usize, f64, usize)>) -> Self {
        let mut adj = vec![Vec::new(); vertices.len()];
        for (k, &(a, b, _, _)) in edges.iter().enumerate() {
            adj[a].push((b, k));
            adj[b].push((a, k));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        let local = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        Self {
            vertices,
            edges,
            adj,
            local,
        }
    }

    /// Graph of one shell: the vertices of its faces and every edge with at
    /// least one face in the shell. Seam edges on the shell's cut boundary
    /// already separate it from its neighbours, so they cost `MIN_WEIGHT`.
    pub fn for_shell(
        mesh: &Mesh,
        labels: &SeamLabels,
        partition: &ShellPartition,
        shell: usize,
        weights: &[f64],
    ) -> Self {
        let in_shell = |f: usize| partition.face_to_shell[f] == shell;
        Self::for_shell_filtered(mesh, partition, shell, |e| {
            let (f0, f1) = mesh.edge_faces(e);
            let inside = in_shell(f0) || f1.is_some_and(in_shell);
            if !inside {
                None
            } else if labels.get(e) && is_cut_boundary(mesh, partition, e) {
                Some(MIN_WEIGHT)
            } else {
                Some(weights[e])
            }
        })
    }

    fn for_shell_filtered(
        mesh: &Mesh,
        partition: &ShellPartition,
        shell: usize,
        weight: impl Fn(usize) -> Option<f64>,
    ) -> Self {
        let mut vertices: Vec<usize> = partition
            .face_to_shell
            .iter()
            .enumerate()
            .filter(|&(_, &s)| s == shell)
            .flat_map(|(f, _)| mesh.faces()[f])
            .collect();
        vertices.sort_unstable();
        vertices.dedup();
        let local: HashMap<usize, usize> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut edges = Vec::new();
        for e in 0..mesh.edge_count() {
            let [a, b] = mesh.edges()[e];
            let (Some(&la), Some(&lb)) = (local.get(&a), local.get(&b)) else {
                continue;
            };
            if let Some(w) = weight(e) {
                edges.push((la, lb, w, e));
            }
        }
        Self::build(vertices, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.local.get(&global).copied()
    }

    /// Sum of weights of the given edge ids.
    pub fn cost(&self, edge_ids: &[usize]) -> f64 {
        let by_id: HashMap<usize, f64> = self.edges.iter().map(|&(_, _, w, id)| (id, w)).collect();
        edge_ids.iter().map(|id| by_id[id]).sum()
    }

    /// Dijkstra from a local source. Ties in distance are settled in vertex
    /// index order, and a predecessor is only replaced by a strictly shorter
    /// path.
    fn dijkstra(&self, src: usize) -> (Vec<f64>, Vec<usize>) {
        let n = self.vertices.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred_edge = vec![usize::MAX; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[src] = 0.0;
        heap.push(HeapItem(0.0, src));
        while let Some(HeapItem(d, v)) = heap.pop() {
            if done[v] {
                continue;
            }
            done[v] = true;
            for &(w, k) in &self.adj[v] {
                let nd = d + self.edges[k].2;
                if nd < dist[w] {
                    dist[w] = nd;
                    pred_edge[w] = k;
                    heap.push(HeapItem(nd, w));
                }
            }
        }
        (dist, pred_edge)
    }
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn is_cut_boundary(mesh: &Mesh, partition: &ShellPartition, e: usize) -> bool {
    match mesh.edge_faces(e) {
        (f0, Some(f1)) => partition.face_to_shell[f0] != partition.face_to_shell[f1],
        _ => false,
    }
}

/// Vertices of `shell` incident to at least one seam edge, whether that edge
/// lies inside the shell or on its cut boundary. Ascending.
pub fn collect_terminals(
    mesh: &Mesh,
    labels: &SeamLabels,
    partition: &ShellPartition,
    shell: usize,
) -> Vec<usize> {
    let mut out: Vec<usize> = partition
        .face_to_shell
        .iter()
        .enumerate()
        .filter(|&(_, &s)| s == shell)
        .flat_map(|(f, _)| mesh.faces()[f])
        .filter(|&v| mesh.vertex_edges(v).iter().any(|&e| labels.get(e)))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// An approximate Steiner tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteinerTree {
    /// Edge ids, ascending.
    pub edges: Vec<usize>,
    pub cost: f64,
}

/// Metric-closure MST heuristic: shortest paths between all terminal pairs,
/// MST of the closure, expansion back to graph edges, an MST of that union to
/// break cycles, then pruning of non-terminal leaves. Terminals are global
/// vertex ids.
pub fn approx_steiner(graph: &ComponentGraph, terminals: &[usize]) -> Result<SteinerTree> {
    let mut term: Vec<usize> = terminals
        .iter()
        .map(|&t| {
            graph.local_index(t).ok_or_else(|| {
                Error::InvalidArgument(format!("terminal {t} is not in the component"))
            })
        })
        .collect::<Result<_>>()?;
    term.sort_unstable();
    term.dedup();
    if term.len() < 2 {
        return Ok(SteinerTree {
            edges: Vec::new(),
            cost: 0.0,
        });
    }

    let runs: Vec<(Vec<f64>, Vec<usize>)> = term.iter().map(|&t| graph.dijkstra(t)).collect();
    let mut closure = Vec::new();
    for i in 0..term.len() {
        for j in i + 1..term.len() {
            let d = runs[i].0[term[j]];
            if !d.is_finite() {
                return Err(Error::DisconnectedTerminals(graph.vertices[term[j]]));
            }
            closure.push((d, i, j));
        }
    }
    closure.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    let mut dsu = DisjointSet::new(term.len());
    let mut in_union = vec![false; graph.edges.len()];
    for &(_, i, j) in &closure {
        if !dsu.union(i, j) {
            continue;
        }
        let pred = &runs[i].1;
        let mut v = term[j];
        while v != term[i] {
            let k = pred[v];
            in_union[k] = true;
            let (a, b, _, _) = graph.edges[k];
            v = if a == v { b } else { a };
        }
    }

    let mut union: Vec<usize> = (0..graph.edges.len()).filter(|&k| in_union[k]).collect();
    union.sort_by(|&x, &y| {
        graph.edges[x]
            .2
            .total_cmp(&graph.edges[y].2)
            .then(graph.edges[x].3.cmp(&graph.edges[y].3))
    });
    let mut dsu = DisjointSet::new(graph.vertex_count());
    let mut keep = vec![false; graph.edges.len()];
    for k in union {
        let (a, b, _, _) = graph.edges[k];
        if dsu.union(a, b) {
            keep[k] = true;
        }
    }

    let mut is_terminal = vec![false; graph.vertex_count()];
    for &t in &term {
        is_terminal[t] = true;
    }
    let mut degree = vec![0usize; graph.vertex_count()];
    for (k, &(a, b, _, _)) in graph.edges.iter().enumerate() {
        if keep[k] {
            degree[a] += 1;
            degree[b] += 1;
        }
    }
    let mut leaves: Vec<usize> = (0..graph.vertex_count())
        .filter(|&v| degree[v] == 1 && !is_terminal[v])
        .collect();
    while let Some(v) = leaves.pop() {
        if degree[v] != 1 {
            continue;
        }
        let &(w, k) = graph.adj[v]
            .iter()
            .find(|&&(_, k)| keep[k])
            .expect("leaf edge");
        keep[k] = false;
        degree[v] = 0;
        degree[w] -= 1;
        if degree[w] == 1 && !is_terminal[w] {
            leaves.push(w);
        }
    }

    let mut edges: Vec<usize> = (0..graph.edges.len())
        .filter(|&k| keep[k])
        .map(|k| graph.edges[k].3)
        .collect();
    edges.sort_unstable();
    let cost = (0..graph.edges.len())
        .filter(|&k| keep[k])
        .map(|k| graph.edges[k].2)
        .sum();
    Ok(SteinerTree { edges, cost })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub cut_threshold: f64,
    /// Join dangling seam endpoints inside each shell after the tree pass.
    pub close_dangling: bool,
    /// A closing path is rejected if it would carve out a shell this small.
    pub min_shell_faces: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            cut_threshold: 0.9,
            close_dangling: true,
            min_shell_faces: 2,
        }
    }
}

/// Per-shell record of one refinement pass.
#[derive(Debug, Clone, Serialize)]
pub struct ShellTree {
    pub shell: usize,
    pub terminals: Vec<usize>,
    /// Tree edges as vertex pairs.
    pub tree: Vec<[usize; 2]>,
    pub cost: f64,
    /// Edges added to close dangling seams.
    pub closing: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefineOutcome {
    #[serde(skip)]
    pub labels: SeamLabels,
    pub shells: Vec<ShellTree>,
}

impl RefineOutcome {
    /// Debug dump of the per-shell trees.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.shells).expect("trees serialize")
    }
}

/// Binarizes `probs` at `cut_threshold`, then rebuilds the seams of every
/// shell from a distortion-weighted Steiner tree. Seams on shell cut
/// boundaries are always kept; seams inside a shell survive only if a tree
/// selects them.
pub fn refine_labels(
    mesh: &Mesh,
    probs: &[f64],
    distortion: &[f64],
    cut_threshold: f64,
) -> Result<SeamLabels> {
    let config = RefineConfig {
        cut_threshold,
        ..RefineConfig::default()
    };
    refine_labels_with(mesh, probs, distortion, &config).map(|o| o.labels)
}

pub fn refine_labels_with(
    mesh: &Mesh,
    probs: &[f64],
    distortion: &[f64],
    config: &RefineConfig,
) -> Result<RefineOutcome> {
    if probs.len() != mesh.edge_count() {
        return Err(Error::LengthMismatch {
            what: "edge probabilities",
            expected: mesh.edge_count(),
            actual: probs.len(),
        });
    }
    let weights = edge_weights(mesh, distortion)?;
    let labels = SeamLabels::from_bools(probs.iter().map(|&p| p >= config.cut_threshold).collect());
    let partition = shells_from_labels(mesh, &labels);

    let mut out = SeamLabels::zeros(mesh.edge_count());
    for e in labels.seam_edges() {
        if is_cut_boundary(mesh, &partition, e) || mesh.is_boundary_edge(e) {
            out.set(e, true);
        }
    }
    let mut records = Vec::new();
    for shell in 0..partition.shell_count {
        let terminals = collect_terminals(mesh, &labels, &partition, shell);
        if terminals.len() < 2 {
            continue;
        }
        let graph = ComponentGraph::for_shell(mesh, &labels, &partition, shell, &weights);
        let tree = approx_steiner(&graph, &terminals)?;
        for &e in &tree.edges {
            out.set(e, true);
        }
        records.push(ShellTree {
            shell,
            terminals,
            tree: tree.edges.iter().map(|&e| mesh.edges()[e]).collect(),
            cost: tree.cost,
            closing: Vec::new(),
        });
    }

    if config.close_dangling {
        for shell in 0..partition.shell_count {
            let closing = close_dangling(
                mesh,
                &out,
                &partition,
                shell,
                &weights,
                config.min_shell_faces,
            )?;
            if closing.is_empty() {
                continue;
            }
            for &e in &closing {
                out.set(e, true);
            }
            let pairs = closing.iter().map(|&e| mesh.edges()[e]).collect();
            match records.iter_mut().find(|r| r.shell == shell) {
                Some(r) => r.closing = pairs,
                None => records.push(ShellTree {
                    shell,
                    terminals: Vec::new(),
                    tree: Vec::new(),
                    cost: 0.0,
                    closing: pairs,
                }),
            }
        }
    }
    Ok(RefineOutcome {
        labels: out,
        shells: records,
    })
}

/// Vertices inside `shell` that end a seam: exactly one incident seam edge,
/// that edge inside the shell, and not on the mesh boundary.
pub fn dangling_endpoints(
    mesh: &Mesh,
    labels: &SeamLabels,
    partition: &ShellPartition,
    shell: usize,
) -> Vec<usize> {
    let boundary = mesh.boundary_vertices();
    let mut out: Vec<usize> = (0..mesh.vertex_count())
        .filter(|&v| !boundary[v])
        .filter(|&v| {
            let seams: Vec<usize> = mesh
                .vertex_edges(v)
                .iter()
                .copied()
                .filter(|&e| labels.get(e))
                .collect();
            seams.len() == 1 && {
                let (f0, f1) = mesh.edge_faces(seams[0]);
                partition.face_to_shell[f0] == shell
                    && f1.is_some_and(|f| partition.face_to_shell[f] == shell)
            }
        })
        .collect();
    out.sort_unstable();
    out
}

/// Joins dangling endpoints of `shell` in pairs along shortest paths through
/// edges that are not yet seams, cheapest pair first. A path is skipped when
/// it would split off a shell of at most `min_shell_faces` faces.
fn close_dangling(
    mesh: &Mesh,
    labels: &SeamLabels,
    partition: &ShellPartition,
    shell: usize,
    weights: &[f64],
    min_shell_faces: usize,
) -> Result<Vec<usize>> {
    let ends = dangling_endpoints(mesh, labels, partition, shell);
    if ends.len() < 2 {
        return Ok(Vec::new());
    }
    let in_shell = |f: usize| partition.face_to_shell[f] == shell;
    let graph =
        ComponentGraph::for_shell_filtered(mesh, partition, shell, |e| match mesh.edge_faces(e) {
            (f0, Some(f1)) if in_shell(f0) && in_shell(f1) && !labels.get(e) => Some(weights[e]),
            _ => None,
        });
    let local: Vec<usize> = ends
        .iter()
        .map(|&v| graph.local_index(v).expect("endpoint in shell"))
        .collect();
    let runs: Vec<(Vec<f64>, Vec<usize>)> = local.iter().map(|&v| graph.dijkstra(v)).collect();
    let mut pairs = Vec::new();
    for i in 0..ends.len() {
        for j in i + 1..ends.len() {
            let d = runs[i].0[local[j]];
            if d.is_finite() {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let shell_faces: Vec<usize> = (0..mesh.face_count()).filter(|&f| in_shell(f)).collect();
    let mut used = vec![false; ends.len()];
    let mut current = labels.clone();
    let mut added = Vec::new();
    for (_, i, j) in pairs {
        if used[i] || used[j] {
            continue;
        }
        let mut path = Vec::new();
        let mut v = local[j];
        while v != local[i] {
            let k = runs[i].1[v];
            path.push(graph.edges[k].3);
            let (a, b, _, _) = graph.edges[k];
            v = if a == v { b } else { a };
        }
        let mut trial = current.clone();
        for &e in &path {
            trial.set(e, true);
        }
        let split = shells_from_labels(mesh, &trial);
        let mut sizes: HashMap<usize, usize> = HashMap::new();
        for &f in &shell_faces {
            *sizes.entry(split.face_to_shell[f]).or_default() += 1;
        }
        if sizes.len() > 1 && sizes.values().any(|&n| n <= min_shell_faces) {
            continue;
        }
        used[i] = true;
        used[j] = true;
        current = trial;
        added.extend(path);
    }
    added.sort_unstable();
    added.dedup();
    Ok(added)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mst_cost(n: usize, edges: &[(usize, usize, f64)], members: &[bool]) -> Option<f64> {
        let mut list: Vec<&(usize, usize, f64)> = edges
            .iter()
            .filter(|e| members[e.0] && members[e.1])
            .collect();
        list.sort_by(|a, b| a.2.total_cmp(&b.2));
        let mut dsu = DisjointSet::new(n);
        let mut cost = 0.0;
        let mut joined = 0;
        for &&(a, b, w) in &list {
            if dsu.union(a, b) {
                cost += w;
                joined += 1;
            }
        }
        let count = members.iter().filter(|&&m| m).count();
        (joined + 1 == count).then_some(cost)
    }

    /// Optimal Steiner cost by trying every set of non-terminal vertices.
    fn exhaustive_steiner(n: usize, edges: &[(usize, usize, f64)], terminals: &[usize]) -> f64 {
        let others: Vec<usize> = (0..n).filter(|v| !terminals.contains(v)).collect();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << others.len()) {
            let mut members = vec![false; n];
            for &t in terminals {
                members[t] = true;
            }
            for (i, &v) in others.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    members[v] = true;
                }
            }
            if let Some(c) = mst_cost(n, edges, &members) {
                best = best.min(c);
            }
        }
        best
    }

    fn random_connected(rng: &mut ChaCha8Rng) -> (usize, Vec<(usize, usize, f64)>) {
        let n = rng.random_range(3..=10);
        let mut edges = Vec::new();
        for v in 1..n {
            edges.push((rng.random_range(0..v), v, rng.random_range(0.05..1.0)));
        }
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(0.3) && !edges.iter().any(|e| (e.0, e.1) == (a, b)) {
                    edges.push((a, b, rng.random_range(0.05..1.0)));
                }
            }
        }
        (n, edges)
    }

    fn is_tree_spanning(
        n: usize,
        edges: &[(usize, usize, f64)],
        tree: &[usize],
        terminals: &[usize],
    ) -> bool {
        let mut dsu = DisjointSet::new(n);
        for &k in tree {
            if !dsu.union(edges[k].0, edges[k].1) {
                return false;
            }
        }
        let root = dsu.find(terminals[0]);
        terminals.iter().all(|&t| dsu.find(t) == root)
    }

    #[test]
    fn eq6_unit_cases() {
        assert_eq!(edge_weight(1.0, 1.0), 1.0);
        assert_eq!(edge_weight(1.5, 0.5), MIN_WEIGHT);
        assert_eq!(edge_weight(2.3, 1.0), MIN_WEIGHT);
        assert!((edge_weight(1.2, 1.0) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn boundary_edges_weigh_one() {
        let m = shapes::grid(1, 1, 1.0);
        let w = edge_weights(&m, &[1.0, 3.0]).unwrap();
        let diag = m.edge_index(0, 3).unwrap();
        for (e, &x) in w.iter().enumerate() {
            assert_eq!(x, if e == diag { MIN_WEIGHT } else { 1.0 });
        }
        assert!(edge_weights(&m, &[1.0]).is_err());
    }

    #[test]
    fn two_terminals_give_shortest_path() {
        // Square 0-1-2-3 with a heavy diagonal 0-2.
        let edges = [
            (0, 1, 1.0),
            (1, 2, 1.0),
            (2, 3, 0.4),
            (3, 0, 0.4),
            (0, 2, 5.0),
        ];
        let g = ComponentGraph::from_edges(4, &edges);
        let t = approx_steiner(&g, &[0, 2]).unwrap();
        assert_eq!(t.edges, vec![2, 3]);
        assert!((t.cost - 0.8).abs() < 1e-15);
    }

    #[test]
    fn star_with_leaf_terminals() {
        let edges = [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)];
        let g = ComponentGraph::from_edges(4, &edges);
        let t = approx_steiner(&g, &[1, 2, 3]).unwrap();
        assert_eq!(t.edges, vec![0, 1, 2]);
        assert_eq!(t.cost, 3.0);
        assert_eq!(exhaustive_steiner(4, &edges, &[1, 2, 3]), 3.0);
    }

    #[test]
    fn disconnected_terminals_are_reported() {
        let g = ComponentGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]);
        assert!(matches!(
            approx_steiner(&g, &[0, 3]),
            Err(Error::DisconnectedTerminals(3))
        ));
    }

    #[test]
    fn random_graphs_within_factor_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let (n, edges) = random_connected(&mut rng);
            let k = rng.random_range(2..=4.min(n));
            let mut terminals: Vec<usize> = (0..n).collect();
            for i in 0..k {
                let j = rng.random_range(i..n);
                terminals.swap(i, j);
            }
            terminals.truncate(k);
            let g = ComponentGraph::from_edges(n, &edges);
            let t = approx_steiner(&g, &terminals).unwrap();
            let opt = exhaustive_steiner(n, &edges, &terminals);
            assert!(is_tree_spanning(n, &edges, &t.edges, &terminals));
            assert!(
                t.cost >= opt - 1e-12 && t.cost <= 2.0 * opt + 1e-12,
                "{} vs {}",
                t.cost,
                opt
            );
        }
    }

    #[test]
    fn terminals_of_dangling_path() {
        let m = shapes::grid(4, 4, 1.0);
        let id = |i: usize, j: usize| j * 5 + i;
        let labels =
            SeamLabels::from_edges(&m, &[[id(1, 2), id(2, 2)], [id(2, 2), id(3, 2)]]).unwrap();
        let p = shells_from_labels(&m, &labels);
        assert_eq!(p.shell_count, 1);
        assert_eq!(
            collect_terminals(&m, &labels, &p, 0),
            vec![id(1, 2), id(2, 2), id(3, 2)]
        );
        let none = SeamLabels::zeros(m.edge_count());
        assert!(collect_terminals(&m, &none, &shells_from_labels(&m, &none), 0).is_empty());
    }

    #[test]
    fn incomplete_equator_keeps_all_ring_terminals() {
        let (m, eq) = shapes::icosphere_with_equator(2);
        let ring = ordered_ring(&m, &eq);
        let mut labels = eq.clone();
        labels.set(m.edge_index(ring[0], ring[1]).unwrap(), false);
        labels.set(m.edge_index(ring[5], ring[6]).unwrap(), false);
        let p = shells_from_labels(&m, &labels);
        assert_eq!(p.shell_count, 1);
        let mut verts = ring.clone();
        verts.sort_unstable();
        assert_eq!(collect_terminals(&m, &labels, &p, 0), verts);
    }

    #[test]
    fn closed_loops_are_a_fixed_point() {
        let (m, eq) = shapes::icosphere_with_equator(2);
        let probs: Vec<f64> = eq
            .as_slice()
            .iter()
            .map(|&b| if b { 1.0 } else { 0.0 })
            .collect();
        let d = vec![1.0; m.face_count()];
        assert_eq!(refine_labels(&m, &probs, &d, 0.9).unwrap(), eq);
    }

    #[test]
    fn gap_in_equator_is_closed() {
        let (m, eq) = shapes::icosphere_with_equator(2);
        let ring = ordered_ring(&m, &eq);
        let mut labels = eq.clone();
        labels.set(m.edge_index(ring[0], ring[1]).unwrap(), false);
        labels.set(m.edge_index(ring[1], ring[2]).unwrap(), false);
        let probs: Vec<f64> = labels
            .as_slice()
            .iter()
            .map(|&b| f64::from(u8::from(b)))
            .collect();
        let atlas = crate::unwrap::unwrap(&m, &labels).unwrap();
        let out = refine_labels_with(&m, &probs, &atlas.face_distortion, &RefineConfig::default())
            .unwrap();
        let out = out.labels;
        assert_eq!(shells_from_labels(&m, &out).shell_count, 2);
        let after = crate::unwrap::unwrap(&m, &out).unwrap();
        assert!(after.avg_distortion() < atlas.avg_distortion());
    }

    #[test]
    fn isolated_spurious_edge_leaves_no_sliver() {
        let m = shapes::grid(6, 6, 1.0);
        let id = |i: usize, j: usize| j * 7 + i;
        let labels = SeamLabels::from_edges(&m, &[[id(3, 3), id(4, 3)]]).unwrap();
        let probs: Vec<f64> = labels
            .as_slice()
            .iter()
            .map(|&b| f64::from(u8::from(b)))
            .collect();
        let out = refine_labels(&m, &probs, &vec![1.0; m.face_count()], 0.9).unwrap();
        assert_eq!(shells_from_labels(&m, &out).shell_count, 1);
    }

    /// Equator vertices in loop order.
    fn ordered_ring(m: &Mesh, eq: &SeamLabels) -> Vec<usize> {
        let edges: Vec<[usize; 2]> = eq.seam_edges().map(|e| m.edges()[e]).collect();
        let mut ring = vec![edges[0][0], edges[0][1]];
        while ring.len() < edges.len() {
            let last = ring[ring.len() - 1];
            let prev = ring[ring.len() - 2];
            let next = edges
                .iter()
                .find_map(|&[a, b]| match (a == last, b == last) {
                    (true, _) if b != prev => Some(b),
                    (_, true) if a != prev => Some(a),
                    _ => None,
                })
                .unwrap();
            ring.push(next);
        }
        ring
    }
}
