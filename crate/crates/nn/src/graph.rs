//! Dual graphs prepared for message passing.

use std::rc::Rc;

use seamgnn_core::dual::{normalize_adjacency, DualGraph};
use seamgnn_core::linalg::{Csr, Matrix};

use crate::tape::SparseOp;

/// A dual graph with the constant operators every layer type needs.
#[derive(Debug, Clone)]
pub struct GraphInput {
    pub features: Matrix,
    /// Neighbours without the node itself, ascending.
    pub neighbors: Rc<Vec<Vec<usize>>>,
    /// Neighbours plus the node itself, ascending.
    pub closed_neighbors: Rc<Vec<Vec<usize>>>,
    /// `D^{-1/2} (A + I) D^{-1/2}`.
    pub gcn: Rc<SparseOp>,
    /// Row-normalized `A`; rows of isolated nodes are zero.
    pub mean: Rc<SparseOp>,
    /// Row-normalized `A + I`.
    pub mean_closed: Rc<SparseOp>,
    /// Plain `A`.
    pub sum: Rc<SparseOp>,
    /// Mesh edge of every node.
    pub dual_to_edge: Vec<usize>,
    pub edge_count: usize,
}

impl GraphInput {
    pub fn from_dual(dual: &DualGraph) -> Self {
        let n = dual.node_count();
        let neighbors: Vec<Vec<usize>> = (0..n).map(|d| dual.neighbors(d).to_vec()).collect();
        let edge_count = dual.dual_to_edge.iter().map(|&e| e + 1).max().unwrap_or(0);
        let mut g = Self::from_parts(
            dual.features.clone(),
            neighbors,
            dual.dual_to_edge.clone(),
            edge_count,
        );
        g.gcn = Rc::new(SparseOp::new(normalize_adjacency(dual).0));
        g
    }

    /// Graph over explicit undirected neighbour lists (symmetric, no
    /// self-loops). Every node maps to its own edge.
    pub fn from_neighbors(features: Matrix, neighbors: Vec<Vec<usize>>) -> Self {
        let n = neighbors.len();
        Self::from_parts(features, neighbors, (0..n).collect(), n)
    }

    fn from_parts(
        features: Matrix,
        mut neighbors: Vec<Vec<usize>>,
        dual_to_edge: Vec<usize>,
        edge_count: usize,
    ) -> Self {
        let n = neighbors.len();
        assert_eq!(features.rows(), n, "feature rows must match node count");
        for nb in &mut neighbors {
            nb.sort_unstable();
            nb.dedup();
        }
        let closed: Vec<Vec<usize>> = neighbors
            .iter()
            .enumerate()
            .map(|(v, nb)| {
                let mut c = nb.clone();
                c.push(v);
                c.sort_unstable();
                c
            })
            .collect();
        let (mut gcn, mut mean, mut mean_closed, mut sum) = (vec![], vec![], vec![], vec![]);
        for v in 0..n {
            let k = neighbors[v].len() as f64;
            let dv = k + 1.0;
            for &u in &closed[v] {
                let du = (neighbors[u].len() + 1) as f64;
                gcn.push((v, u, 1.0 / (dv * du).sqrt()));
                mean_closed.push((v, u, 1.0 / dv));
            }
            for &u in &neighbors[v] {
                mean.push((v, u, 1.0 / k));
                sum.push((v, u, 1.0));
            }
        }
        let op = |t: &[(usize, usize, f64)]| Rc::new(SparseOp::new(Csr::from_triplets(n, n, t)));
        Self {
            features,
            neighbors: Rc::new(neighbors),
            closed_neighbors: Rc::new(closed),
            gcn: op(&gcn),
            mean: op(&mean),
            mean_closed: op(&mean_closed),
            sum: op(&sum),
            dual_to_edge,
            edge_count,
        }
    }

    pub fn node_count(&self) -> usize {
        self.neighbors.len()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Copy with the nodes relabeled so that old node `v` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.node_count();
        assert_eq!(perm.len(), n);
        let mut features = Matrix::zeros(n, self.features.cols());
        let mut neighbors = vec![Vec::new(); n];
        for v in 0..n {
            features
                .row_mut(perm[v])
                .copy_from_slice(self.features.row(v));
            neighbors[perm[v]] = self.neighbors[v].iter().map(|&u| perm[u]).collect();
        }
        Self::from_neighbors(features, neighbors)
    }

    /// Same topology, different features.
    pub fn with_features(&self, features: Matrix) -> Self {
        assert_eq!(features.rows(), self.node_count());
        Self {
            features,
            ..self.clone()
        }
    }

    /// Per-node labels from per-edge labels.
    pub fn node_labels(&self, edge_labels: &[bool]) -> Vec<usize> {
        self.dual_to_edge
            .iter()
            .map(|&e| usize::from(edge_labels[e]))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use seamgnn_core::dual::mesh_to_dual;
    use seamgnn_core::shapes;

    #[test]
    fn operators_from_dual_agree_with_generic_construction() {
        let mesh = shapes::icosahedron();
        let dual = mesh_to_dual(&mesh, false).unwrap();
        let g = GraphInput::from_dual(&dual);
        let generic = GraphInput::from_neighbors(dual.features.clone(), (*g.neighbors).clone());
        assert!(
            g.gcn
                .forward
                .to_dense()
                .max_abs_diff(&generic.gcn.forward.to_dense())
                < 1e-15
        );
        assert_eq!(g.edge_count, mesh.edge_count());
        assert_eq!(g.max_degree(), 8);
    }

    #[test]
    fn mean_rows_sum_to_one() {
        let g = GraphInput::from_neighbors(Matrix::zeros(3, 1), vec![vec![1], vec![0], vec![]]);
        let m = g.mean.forward.to_dense();
        assert_eq!(m.row(0), &[0.0, 1.0, 0.0]);
        assert_eq!(m.row(2), &[0.0, 0.0, 0.0]);
        let c = g.mean_closed.forward.to_dense();
        assert_eq!(c.row(2), &[0.0, 0.0, 1.0]);
    }
}
