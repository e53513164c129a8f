//! Vertex features, dual (line) graph construction and GCN normalization.
//!
//! A dual node stands for one mesh edge; two dual nodes are adjacent when
//! their edges share an endpoint. In the augmented variant every edge `(i, j)`
//! gets two nodes carrying `[x_i ‖ x_j]` and `[x_j ‖ x_i]`.

use std::f64::consts::{PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom;
use crate::linalg::{Csr, Matrix};
use crate::mesh::Mesh;

/// Width of a vertex feature row: position (3), normal (3), curvature (1).
pub const VERTEX_FEATURES: usize = 7;
/// Width of a dual node feature row.
pub const DUAL_FEATURES: usize = 2 * VERTEX_FEATURES;

/// Area-weighted vertex normals. Normals stored in files are never used.
pub fn vertex_normals(mesh: &Mesh) -> Result<Vec<[f64; 3]>> {
    let mut acc = vec![[0.0; 3]; mesh.vertex_count()];
    let mut unit_acc = vec![[0.0; 3]; mesh.vertex_count()];
    for f in 0..mesh.face_count() {
        let [a, b, c] = mesh.face_positions(f);
        let n = geom::triangle_normal(a, b, c);
        let unit = geom::normalize(n).unwrap_or([0.0; 3]);
        for &v in &mesh.faces()[f] {
            acc[v] = geom::add(acc[v], n);
            unit_acc[v] = geom::add(unit_acc[v], unit);
        }
    }
    (0..mesh.vertex_count())
        .map(|v| {
            if mesh.vertex_faces(v).is_empty() {
                return Err(Error::IsolatedVertex(v));
            }
            // Fall back to unweighted normals when the area-weighted sum cancels.
            geom::normalize(acc[v])
                .or_else(|| geom::normalize(unit_acc[v]))
                .ok_or(Error::DegenerateFace(mesh.vertex_faces(v)[0]))
        })
        .collect()
}

/// Discrete Gaussian curvature as the raw angle deficit: `2π − Σθ` at interior
/// vertices and `π − Σθ` on the boundary.
pub fn gaussian_curvature(mesh: &Mesh) -> Result<Vec<f64>> {
    let mut angle_sum = vec![0.0; mesh.vertex_count()];
    for (f, face) in mesh.faces().iter().enumerate() {
        let p = mesh.face_positions(f);
        if mesh.face_area(f) == 0.0 || !mesh.face_area(f).is_finite() {
            return Err(Error::DegenerateFace(f));
        }
        for k in 0..3 {
            let u = geom::sub(p[(k + 1) % 3], p[k]);
            let w = geom::sub(p[(k + 2) % 3], p[k]);
            let theta = geom::angle_between(u, w);
            if !theta.is_finite() {
                return Err(Error::DegenerateFace(f));
            }
            angle_sum[face[k]] += theta;
        }
    }
    let boundary = mesh.boundary_vertices();
    Ok(angle_sum
        .iter()
        .zip(&boundary)
        .map(|(&s, &b)| if b { PI - s } else { TAU - s })
        .collect())
}

/// Per-vertex features: bbox-normalized position, unit normal, curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFeatureMatrix(pub Matrix);

impl NodeFeatureMatrix {
    pub fn rows(&self) -> usize {
        self.0.rows()
    }

    pub fn row(&self, v: usize) -> &[f64] {
        self.0.row(v)
    }
}

/// Builds the 7-wide vertex feature matrix.
///
/// Positions are centred on the bounding-box centre and divided by half the
/// bounding-box diagonal, so every coordinate lies in `[-1, 1]`.
pub fn node_features(mesh: &Mesh) -> Result<NodeFeatureMatrix> {
    let (lo, hi) = mesh.bounding_box();
    let half_diag = 0.5 * geom::norm(geom::sub(hi, lo));
    if half_diag <= 0.0 || !half_diag.is_finite() {
        return Err(Error::ZeroExtent);
    }
    let centre = geom::scale(geom::add(lo, hi), 0.5);
    let normals = vertex_normals(mesh)?;
    let curvature = gaussian_curvature(mesh)?;
    let mut m = Matrix::zeros(mesh.vertex_count(), VERTEX_FEATURES);
    for (v, p) in mesh.vertices().iter().enumerate() {
        let row = m.row_mut(v);
        let q = geom::scale(geom::sub(*p, centre), 1.0 / half_diag);
        row[..3].copy_from_slice(&q);
        row[3..6].copy_from_slice(&normals[v]);
        row[6] = curvature[v];
    }
    Ok(NodeFeatureMatrix(m))
}

/// Line graph of a mesh with per-node features.
#[derive(Debug, Clone)]
pub struct DualGraph {
    /// Symmetric 0/1 adjacency without self-loops.
    pub adjacency: Csr,
    /// Mesh edge index of every dual node.
    pub dual_to_edge: Vec<usize>,
    /// `node_count × 14` feature rows.
    pub features: Matrix,
    pub augmented: bool,
}

impl DualGraph {
    pub fn node_count(&self) -> usize {
        self.dual_to_edge.len()
    }

    /// Neighbour dual nodes of `d`, ascending.
    pub fn neighbors(&self, d: usize) -> &[usize] {
        self.adjacency.row(d).0
    }

    pub fn degree(&self, d: usize) -> usize {
        self.neighbors(d).len()
    }

    /// Copy of this graph with different features (same node count).
    pub fn with_features(&self, features: Matrix) -> Self {
        assert_eq!(features.rows(), self.node_count());
        Self {
            features,
            ..self.clone()
        }
    }

    /// Debug dump: `{"nodes": n, "augmented": bool, "dual_to_edge": [...], "edges": [[a, b], ...]}`
    /// listing each undirected dual edge once with `a < b`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            nodes: usize,
            augmented: bool,
            dual_to_edge: &'a [usize],
            edges: Vec<[usize; 2]>,
        }
        let mut edges = Vec::new();
        for d in 0..self.node_count() {
            for &n in self.neighbors(d) {
                if d < n {
                    edges.push([d, n]);
                }
            }
        }
        serde_json::to_string(&Dump {
            nodes: self.node_count(),
            augmented: self.augmented,
            dual_to_edge: &self.dual_to_edge,
            edges,
        })
        .expect("serializable")
    }
}

/// Builds the standard or augmented dual graph of `mesh`.
///
/// Standard: node `e` ↔ mesh edge `e` with feature `[x_min ‖ x_max]` in
/// canonical endpoint order. Augmented: nodes `2e` and `2e + 1` carry
/// `[x_i ‖ x_j]` and `[x_j ‖ x_i]`; each is linked to every other node whose
/// edge shares an endpoint, including its twin.
pub fn build_dual(mesh: &Mesh, features: &NodeFeatureMatrix, augmented: bool) -> Result<DualGraph> {
    if features.rows() != mesh.vertex_count() {
        return Err(Error::LengthMismatch {
            what: "vertex features",
            expected: mesh.vertex_count(),
            actual: features.rows(),
        });
    }
    let edges = mesh.edges();
    let copies = if augmented { 2 } else { 1 };
    let n = edges.len() * copies;
    let mut triplets = Vec::new();
    for (e, &[a, b]) in edges.iter().enumerate() {
        let mut nbrs: Vec<usize> = mesh
            .vertex_edges(a)
            .iter()
            .chain(mesh.vertex_edges(b))
            .copied()
            .filter(|&o| o != e)
            .collect();
        nbrs.sort_unstable();
        nbrs.dedup();
        for c in 0..copies {
            let d = e * copies + c;
            for &o in &nbrs {
                for oc in 0..copies {
                    triplets.push((d, o * copies + oc, 1.0));
                }
            }
            if augmented {
                triplets.push((d, e * copies + (1 - c), 1.0));
            }
        }
    }
    let adjacency = Csr::from_triplets(n, n, &triplets);

    let mut feats = Matrix::zeros(n, DUAL_FEATURES);
    let mut dual_to_edge = Vec::with_capacity(n);
    for (e, &[a, b]) in edges.iter().enumerate() {
        for c in 0..copies {
            let d = e * copies + c;
            let (first, second) = if c == 0 { (a, b) } else { (b, a) };
            let row = feats.row_mut(d);
            row[..VERTEX_FEATURES].copy_from_slice(features.row(first));
            row[VERTEX_FEATURES..].copy_from_slice(features.row(second));
            dual_to_edge.push(e);
        }
    }
    Ok(DualGraph {
        adjacency,
        dual_to_edge,
        features: feats,
        augmented,
    })
}

/// `D^{-1/2} (A + I) D^{-1/2}` where `D` is the degree matrix of `A + I`.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency(pub Csr);

pub fn normalize_adjacency(dual: &DualGraph) -> NormalizedAdjacency {
    let n = dual.node_count();
    let deg: Vec<f64> = (0..n).map(|d| (dual.degree(d) + 1) as f64).collect();
    let mut triplets = Vec::with_capacity(dual.adjacency.nnz() + n);
    for d in 0..n {
        triplets.push((d, d, 1.0 / deg[d]));
        for &o in dual.neighbors(d) {
            triplets.push((d, o, 1.0 / (deg[d] * deg[o]).sqrt()));
        }
    }
    NormalizedAdjacency(Csr::from_triplets(n, n, &triplets))
}

/// Convenience: features + dual in one call.
pub fn mesh_to_dual(mesh: &Mesh, augmented: bool) -> Result<DualGraph> {
    let features = node_features(mesh)?;
    build_dual(mesh, &features, augmented)
}
