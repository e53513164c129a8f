//! Indexed triangle meshes with a canonical edge list.
//!
//! Every per-edge vector in the workspace (seam labels, probabilities, edge
//! weights, dual nodes) is aligned with [`Mesh::edges`], which is sorted
//! lexicographically on `(min, max)` vertex pairs.

mod cut;
mod obj;
mod ply;
mod sidecar;

pub use cut::{
    cut_mesh, cut_mesh_with_origin, seams_from_uvs, shells_from_labels, CutMesh, ShellPartition,
};
pub use obj::{parse_obj, write_obj};
pub use ply::parse_ply;
pub use sidecar::LabelSidecar;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};

pub type Uv = [f64; 2];

/// Marker for an absent second face on a boundary edge.
const NO_FACE: usize = usize::MAX;

/// How UVs were attached to a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UvSource {
    /// One UV per face corner (OBJ `vt`); discontinuities encode seams.
    PerCorner,
    /// One UV per vertex (PLY `s`/`t`); no seams can be derived.
    PerVertex,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    name: String,
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_faces: Vec<[usize; 2]>,
    face_edges: Vec<[usize; 3]>,
    vertex_edges: Vec<Vec<usize>>,
    vertex_faces: Vec<Vec<usize>>,
    corner_uvs: Option<Vec<[Uv; 3]>>,
    uv_source: Option<UvSource>,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.faces == other.faces
            && self.corner_uvs == other.corner_uvs
    }
}

impl Mesh {
    /// Validates faces and derives the canonical edge list and adjacency.
    pub fn new(
        name: impl Into<String>,
        vertices: Vec<Vec3>,
        faces: Vec<[usize; 3]>,
    ) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::NoFaces);
        }
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(Error::IndexOutOfRange {
                        face: fi,
                        index: v,
                        vertex_count: n,
                    });
                }
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                let vertex = if f[0] == f[1] || f[0] == f[2] {
                    f[0]
                } else {
                    f[1]
                };
                return Err(Error::RepeatedVertex { face: fi, vertex });
            }
        }

        let mut half: Vec<([usize; 2], usize, usize)> = Vec::with_capacity(faces.len() * 3);
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                half.push(([a.min(b), a.max(b)], fi, k));
            }
        }
        half.sort_unstable();

        let mut edges = Vec::with_capacity(half.len() / 2 + 1);
        let mut edge_faces: Vec<[usize; 2]> = Vec::with_capacity(half.len() / 2 + 1);
        let mut face_edges = vec![[0usize; 3]; faces.len()];
        let mut i = 0;
        while i < half.len() {
            let key = half[i].0;
            let mut j = i;
            while j < half.len() && half[j].0 == key {
                j += 1;
            }
            if j - i > 2 {
                return Err(Error::NonManifoldEdge(key[0], key[1], j - i));
            }
            let e = edges.len();
            edges.push(key);
            let mut ef = [NO_FACE; 2];
            for (slot, h) in half[i..j].iter().enumerate() {
                ef[slot] = h.1;
                face_edges[h.1][h.2] = e;
            }
            if j - i == 2 && ef[0] == ef[1] {
                return Err(Error::NonManifoldEdge(key[0], key[1], 2));
            }
            edge_faces.push(ef);
            i = j;
        }

        let mut vertex_edges = vec![Vec::new(); n];
        for (e, &[a, b]) in edges.iter().enumerate() {
            vertex_edges[a].push(e);
            vertex_edges[b].push(e);
        }
        let mut vertex_faces = vec![Vec::new(); n];
        for (fi, f) in faces.iter().enumerate() {
            for &v in f {
                vertex_faces[v].push(fi);
            }
        }

        Ok(Self {
            name: name.into(),
            vertices,
            faces,
            edges,
            edge_faces,
            face_edges,
            vertex_edges,
            vertex_faces,
            corner_uvs: None,
            uv_source: None,
        })
    }

    /// Attaches per-corner UVs (one triple per face).
    pub fn with_corner_uvs(mut self, uvs: Vec<[Uv; 3]>) -> Result<Self> {
        if uvs.len() != self.faces.len() {
            return Err(Error::LengthMismatch {
                what: "corner uvs",
                expected: self.faces.len(),
                actual: uvs.len(),
            });
        }
        self.corner_uvs = Some(uvs);
        self.uv_source = Some(UvSource::PerCorner);
        Ok(self)
    }

    /// Attaches per-vertex UVs, expanded to corners.
    pub fn with_vertex_uvs(mut self, uvs: &[Uv]) -> Result<Self> {
        if uvs.len() != self.vertices.len() {
            return Err(Error::LengthMismatch {
                what: "vertex uvs",
                expected: self.vertices.len(),
                actual: uvs.len(),
            });
        }
        let corners = self.faces.iter().map(|f| f.map(|v| uvs[v])).collect();
        self.corner_uvs = Some(corners);
        self.uv_source = Some(UvSource::PerVertex);
        Ok(self)
    }

    pub fn without_uvs(mut self) -> Self {
        self.corner_uvs = None;
        self.uv_source = None;
        self
    }

    /// Same topology, new positions.
    pub fn with_positions(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::LengthMismatch {
                what: "vertex positions",
                expected: self.vertices.len(),
                actual: vertices.len(),
            });
        }
        let mut m = self.clone();
        m.vertices = vertices;
        Ok(m)
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn corner_uvs(&self) -> Option<&[[Uv; 3]]> {
        self.corner_uvs.as_deref()
    }

    pub fn uv_source(&self) -> Option<UvSource> {
        self.uv_source
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Index of the edge joining `a` and `b`, if present.
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = [a.min(b), a.max(b)];
        self.edges.binary_search(&key).ok()
    }

    /// Faces incident to edge `e`; the second is `None` on boundary edges.
    pub fn edge_faces(&self, e: usize) -> (usize, Option<usize>) {
        let [f0, f1] = self.edge_faces[e];
        (f0, (f1 != NO_FACE).then_some(f1))
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_faces[e][1] == NO_FACE
    }

    /// Edge indices of face `f`; entry `k` joins corners `k` and `k + 1`.
    pub fn face_edges(&self, f: usize) -> [usize; 3] {
        self.face_edges[f]
    }

    /// Edge indices incident to `v`, ascending.
    pub fn vertex_edges(&self, v: usize) -> &[usize] {
        &self.vertex_edges[v]
    }

    /// Faces incident to `v`, ascending.
    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn vertex_degree(&self, v: usize) -> usize {
        self.vertex_edges[v].len()
    }

    /// Neighbouring vertices of `v`, in edge order.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.vertex_edges[v].iter().map(move |&e| {
            let [a, b] = self.edges[e];
            if a == v {
                b
            } else {
                a
            }
        })
    }

    /// The endpoint of edge `e` that is not `v`.
    pub fn other_end(&self, e: usize, v: usize) -> usize {
        let [a, b] = self.edges[e];
        if a == v {
            b
        } else {
            a
        }
    }

    pub fn face_positions(&self, f: usize) -> [Vec3; 3] {
        self.faces[f].map(|v| self.vertices[v])
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_positions(f);
        geom::triangle_area(a, b, c)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Vertices lying on at least one boundary edge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut out = vec![false; self.vertices.len()];
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            if self.is_boundary_edge(e) {
                out[a] = true;
                out[b] = true;
            }
        }
        out
    }

    pub fn is_closed(&self) -> bool {
        (0..self.edges.len()).all(|e| !self.is_boundary_edge(e))
    }

    /// `V - E + F`, counting only vertices referenced by faces.
    pub fn euler_characteristic(&self) -> i64 {
        let used = self.vertex_faces.iter().filter(|f| !f.is_empty()).count();
        used as i64 - self.edges.len() as i64 + self.faces.len() as i64
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        geom::norm(geom::sub(hi, lo))
    }
}

/// Per-edge binary seam labels aligned with [`Mesh::edges`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SeamLabels(Vec<bool>);

impl SeamLabels {
    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn ones(len: usize) -> Self {
        Self(vec![true; len])
    }

    pub fn from_bools(labels: Vec<bool>) -> Self {
        Self(labels)
    }

    /// Builds labels from 0/1 values; anything else is rejected.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::InvalidArgument(format!(
                    "label value {other} is not 0 or 1"
                ))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    /// Labels the given edges of `mesh` as seams.
    pub fn from_edges(mesh: &Mesh, seam_edges: &[[usize; 2]]) -> Result<Self> {
        let mut labels = Self::zeros(mesh.edge_count());
        for &[a, b] in seam_edges {
            let e = mesh
                .edge_index(a, b)
                .ok_or_else(|| Error::InvalidArgument(format!("({a}, {b}) is not a mesh edge")))?;
            labels.0[e] = true;
        }
        Ok(labels)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, e: usize) -> bool {
        self.0[e]
    }

    #[inline]
    pub fn set(&mut self, e: usize, seam: bool) {
        self.0[e] = seam;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Indices of seam edges, ascending.
    pub fn seam_edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(e, _)| e)
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.0.iter().map(|&b| u8::from(b)).collect()
    }

    pub(crate) fn check_len(&self, mesh: &Mesh) -> Result<()> {
        if self.len() != mesh.edge_count() {
            return Err(Error::LengthMismatch {
                what: "seam labels",
                expected: mesh.edge_count(),
                actual: self.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn single_triangle() {
        let m = Mesh::new(
            "t",
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(m.edges(), &[[0, 1], [0, 2], [1, 2]]);
        assert_eq!(m.face_edges(0), [0, 2, 1]);
        assert!(m.is_boundary_edge(0));
        assert_eq!(m.euler_characteristic(), 1);
    }

    #[test]
    fn rejects_three_faces_on_one_edge() {
        let v = vec![
            [0.0; 3],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let err = Mesh::new("fin", v, vec![[0, 1, 2], [1, 0, 3], [0, 1, 4]]).unwrap_err();
        assert!(matches!(err, Error::NonManifoldEdge(0, 1, 3)));
    }

    #[test]
    fn rejects_repeated_vertex_and_bad_index() {
        let v = vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        assert!(matches!(
            Mesh::new("r", v.clone(), vec![[0, 0, 1]]),
            Err(Error::RepeatedVertex { face: 0, vertex: 0 })
        ));
        assert!(matches!(
            Mesh::new("r", v, vec![[0, 1, 3]]),
            Err(Error::IndexOutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn icosahedron_counts() {
        let m = shapes::icosahedron();
        assert_eq!(
            (m.vertex_count(), m.edge_count(), m.face_count()),
            (12, 30, 20)
        );
        assert!(m.is_closed());
        assert_eq!(m.euler_characteristic(), 2);
        for v in 0..12 {
            assert_eq!(m.vertex_degree(v), 5);
        }
    }

    #[test]
    fn labels_from_bits_validates() {
        assert!(SeamLabels::from_bits(&[0, 1, 2]).is_err());
        let l = SeamLabels::from_bits(&[0, 1, 1]).unwrap();
        assert_eq!(l.count(), 2);
        assert_eq!(l.seam_edges().collect::<Vec<_>>(), vec![1, 2]);
    }
}
