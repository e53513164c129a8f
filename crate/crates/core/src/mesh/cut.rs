use super::{Mesh, SeamLabels};
use crate::error::{Error, Result};
use crate::graph::DisjointSet;

/// UV differences at or below this (in UV units) are not discontinuities.
pub const UV_TOLERANCE: f64 = 1e-7;

/// Face-to-shell assignment induced by cutting along seams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShellPartition {
    pub face_to_shell: Vec<usize>,
    pub shell_count: usize,
}

impl ShellPartition {
    /// Face lists per shell, each ascending.
    pub fn shells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.shell_count];
        for (f, &s) in self.face_to_shell.iter().enumerate() {
            out[s].push(f);
        }
        out
    }

    pub fn shell_sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.shell_count];
        for &s in &self.face_to_shell {
            out[s] += 1;
        }
        out
    }
}

fn corner_of(face: &[usize; 3], v: usize) -> usize {
    face.iter()
        .position(|&x| x == v)
        .expect("vertex is a corner of the face")
}

/// Labels an interior edge as a seam when its two faces disagree on the UV of
/// either shared vertex. Boundary edges are always 0.
pub fn seams_from_uvs(mesh: &Mesh) -> Result<SeamLabels> {
    let uvs = mesh.corner_uvs().ok_or(Error::MissingUvs)?;
    let faces = mesh.faces();
    let mut labels = SeamLabels::zeros(mesh.edge_count());
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        let (f0, Some(f1)) = mesh.edge_faces(e) else {
            continue;
        };
        let differs = [a, b].iter().any(|&v| {
            let p = uvs[f0][corner_of(&faces[f0], v)];
            let q = uvs[f1][corner_of(&faces[f1], v)];
            (p[0] - q[0]).abs() > UV_TOLERANCE || (p[1] - q[1]).abs() > UV_TOLERANCE
        });
        labels.set(e, differs);
    }
    Ok(labels)
}

/// Groups faces that are connected through non-seam edges.
///
/// Shell indices are contiguous and numbered in order of each shell's lowest
/// face index.
pub fn shells_from_labels(mesh: &Mesh, labels: &SeamLabels) -> ShellPartition {
    assert_eq!(
        labels.len(),
        mesh.edge_count(),
        "labels must align with mesh edges"
    );
    let mut dsu = DisjointSet::new(mesh.face_count());
    for e in 0..mesh.edge_count() {
        if labels.get(e) {
            continue;
        }
        if let (f0, Some(f1)) = mesh.edge_faces(e) {
            dsu.union(f0, f1);
        }
    }
    let (face_to_shell, shell_count) = dsu.contiguous_labels();
    ShellPartition {
        face_to_shell,
        shell_count,
    }
}

/// A cut mesh together with the original vertex of every new vertex.
#[derive(Debug, Clone)]
pub struct CutMesh {
    pub mesh: Mesh,
    pub vertex_origin: Vec<usize>,
}

/// Splits vertices along seams so that faces on different sides of a seam no
/// longer share an edge. See [`cut_mesh_with_origin`].
pub fn cut_mesh(mesh: &Mesh, labels: &SeamLabels) -> Result<Mesh> {
    cut_mesh_with_origin(mesh, labels).map(|c| c.mesh)
}

/// Splits every vertex into one copy per fan of incident faces connected
/// through non-seam edges around it.
///
/// The fan containing the lowest face index keeps the original vertex index;
/// extra copies are appended in vertex order. Faces keep their order and any
/// per-corner UVs. Vertices whose face fans are already disconnected (bowties)
/// are split as well.
pub fn cut_mesh_with_origin(mesh: &Mesh, labels: &SeamLabels) -> Result<CutMesh> {
    labels.check_len(mesh)?;
    let n = mesh.vertex_count();
    let mut faces = mesh.faces().to_vec();
    let mut vertices = mesh.vertices().to_vec();
    let mut vertex_origin: Vec<usize> = (0..n).collect();

    for v in 0..n {
        let fan = mesh.vertex_faces(v);
        if fan.len() <= 1 {
            continue;
        }
        let mut dsu = DisjointSet::new(fan.len());
        for &e in mesh.vertex_edges(v) {
            if labels.get(e) {
                continue;
            }
            if let (f0, Some(f1)) = mesh.edge_faces(e) {
                let i0 = fan.binary_search(&f0).expect("face in fan");
                let i1 = fan.binary_search(&f1).expect("face in fan");
                dsu.union(i0, i1);
            }
        }
        let (class, count) = dsu.contiguous_labels();
        if count == 1 {
            continue;
        }
        let base = vertices.len();
        for _ in 1..count {
            vertices.push(mesh.vertices()[v]);
            vertex_origin.push(v);
        }
        for (slot, &f) in fan.iter().enumerate() {
            if class[slot] == 0 {
                continue;
            }
            let k = corner_of(&mesh.faces()[f], v);
            faces[f][k] = base + class[slot] - 1;
        }
    }

    let mut cut = Mesh::new(mesh.name(), vertices, faces)?;
    if let Some(uvs) = mesh.corner_uvs() {
        cut = match mesh.uv_source() {
            Some(super::UvSource::PerVertex) => {
                let mut m = cut.with_corner_uvs(uvs.to_vec())?;
                m.uv_source = Some(super::UvSource::PerVertex);
                m
            }
            _ => cut.with_corner_uvs(uvs.to_vec())?,
        };
    }
    Ok(CutMesh {
        mesh: cut,
        vertex_origin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    /// Closed 4-triangle fan around centre vertex 0 with rim 1..=4.
    fn fan() -> Mesh {
        Mesh::new(
            "fan",
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [-1.0, 0.0, 0.0],
                [0.0, -1.0, 0.0],
            ],
            vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]],
        )
        .unwrap()
    }

    #[test]
    fn grid_with_single_chart_has_no_seams() {
        let m = shapes::grid(4, 3, 1.0);
        let uvs = m
            .faces()
            .iter()
            .map(|f| f.map(|v| [m.vertices()[v][0], m.vertices()[v][1]]))
            .collect();
        let m = m.with_corner_uvs(uvs).unwrap();
        assert_eq!(seams_from_uvs(&m).unwrap().count(), 0);
    }

    #[test]
    fn seams_need_uvs() {
        assert!(matches!(
            seams_from_uvs(&shapes::icosahedron()),
            Err(Error::MissingUvs)
        ));
    }

    #[test]
    fn shared_edge_with_identical_uvs_is_not_a_seam() {
        let m = Mesh::new(
            "pair",
            vec![[0.0; 3], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let uv = |v: usize| [m.vertices()[v][0], m.vertices()[v][1]];
        let uvs = m.faces().iter().map(|f| f.map(uv)).collect();
        let m = m.with_corner_uvs(uvs).unwrap();
        let l = seams_from_uvs(&m).unwrap();
        assert!(!l.get(m.edge_index(0, 2).unwrap()));

        // Shift one corner of the second face: the shared edge becomes a seam.
        let mut uvs = m.corner_uvs().unwrap().to_vec();
        uvs[1][0][0] += 1e-3;
        let m = m.clone().with_corner_uvs(uvs).unwrap();
        let l = seams_from_uvs(&m).unwrap();
        assert_eq!(
            l.seam_edges().collect::<Vec<_>>(),
            vec![m.edge_index(0, 2).unwrap()]
        );
    }

    #[test]
    fn shells_trivial_cases() {
        let m = shapes::icosphere(1);
        assert_eq!(
            shells_from_labels(&m, &SeamLabels::zeros(m.edge_count())).shell_count,
            1
        );
        let all = shells_from_labels(&m, &SeamLabels::ones(m.edge_count()));
        assert_eq!(all.shell_count, m.face_count());
    }

    #[test]
    fn equator_splits_sphere_in_two() {
        let (m, l) = shapes::icosphere_with_equator(2);
        let p = shells_from_labels(&m, &l);
        assert_eq!(p.shell_count, 2);
        assert_eq!(p.shell_sizes(), vec![m.face_count() / 2; 2]);
    }

    #[test]
    fn cut_with_no_seams_is_identity() {
        let m = shapes::icosphere(1);
        let c = cut_mesh(&m, &SeamLabels::zeros(m.edge_count())).unwrap();
        assert_eq!(c, m);
    }

    #[test]
    fn cut_along_equator_duplicates_ring() {
        let (m, l) = shapes::icosphere_with_equator(2);
        let ring: std::collections::BTreeSet<usize> =
            l.seam_edges().flat_map(|e| m.edges()[e]).collect();
        let c = cut_mesh_with_origin(&m, &l).unwrap();
        assert_eq!(c.mesh.vertex_count(), m.vertex_count() + ring.len());
        assert_eq!(c.mesh.face_count(), m.face_count());
        assert!((c.mesh.total_area() - m.total_area()).abs() <= 1e-12 * m.total_area());
        assert_eq!(
            shells_from_labels(&c.mesh, &SeamLabels::zeros(c.mesh.edge_count())).shell_count,
            2
        );
        for (new, &old) in c.vertex_origin.iter().enumerate() {
            assert_eq!(c.mesh.vertices()[new], m.vertices()[old]);
        }
    }

    #[test]
    fn single_seam_in_fan_severs_adjacency() {
        let m = fan();
        let l = SeamLabels::from_edges(&m, &[[0, 1]]).unwrap();
        let c = cut_mesh_with_origin(&m, &l).unwrap();
        // Rim vertex 1 has its two faces separated; the centre fan stays whole.
        assert_eq!(c.mesh.vertex_count(), 6);
        assert_eq!(c.vertex_origin[5], 1);
        assert_eq!(c.mesh.edge_count(), m.edge_count() + 1);
        let e = c.mesh.edge_index(0, 1).unwrap();
        assert!(c.mesh.is_boundary_edge(e));
        assert!(c.mesh.is_boundary_edge(c.mesh.edge_index(0, 5).unwrap()));
    }
}
