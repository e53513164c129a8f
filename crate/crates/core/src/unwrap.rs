//! Per-shell Tutte parameterization and area-distortion measurement.
//!
//! Shells come from cutting the mesh along its seams. Each shell's longest
//! boundary loop is pinned to the unit circle (arc-length spacing) and every
//! other vertex is placed at the average of its neighbours. Shells that are
//! still closed after cutting get an extra cut path first.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom;
use crate::linalg::{conjugate_gradient, Csr};
use crate::mesh::{cut_mesh, cut_mesh_with_origin, shells_from_labels, Mesh, SeamLabels, Uv};

/// Laplacian residual every embedding must reach.
pub const TUTTE_RESIDUAL: f64 = 1e-10;

/// One flattened shell.
#[derive(Debug, Clone, Serialize)]
pub struct Chart {
    /// Mesh faces in this shell, ascending.
    pub faces: Vec<usize>,
    /// UVs for the corners of `faces`, in the same order.
    pub corner_uvs: Vec<[Uv; 3]>,
    /// Set when the shell is not a topological disk, so the embedding may fold.
    pub approximate: bool,
    /// Max-norm Laplacian residual of the solve.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UvAtlas {
    pub charts: Vec<Chart>,
    /// Global UV scale `s` making total UV area equal total 3D area.
    pub area_scale: f64,
    /// `D_f = s² · uv_area(f) / area3d(f)` per mesh face.
    pub face_distortion: Vec<f64>,
    /// Mesh edges cut only to open closed shells (not part of the input seams).
    pub added_seams: Vec<usize>,
}

impl UvAtlas {
    /// Builds an atlas from explicit per-corner UVs, one chart per
    /// face-connected component of the UV layout.
    pub fn from_corner_uvs(mesh: &Mesh, corner_uvs: Vec<[Uv; 3]>) -> Result<Self> {
        if corner_uvs.len() != mesh.face_count() {
            return Err(Error::LengthMismatch {
                what: "corner uvs",
                expected: mesh.face_count(),
                actual: corner_uvs.len(),
            });
        }
        let with_uvs = mesh.clone().with_corner_uvs(corner_uvs.clone())?;
        let seams = crate::mesh::seams_from_uvs(&with_uvs)?;
        let part = shells_from_labels(mesh, &seams);
        let charts = part
            .shells()
            .into_iter()
            .map(|faces| Chart {
                corner_uvs: faces.iter().map(|&f| corner_uvs[f]).collect(),
                faces,
                approximate: false,
                residual: 0.0,
            })
            .collect();
        let mut atlas = Self {
            charts,
            area_scale: 1.0,
            face_distortion: Vec::new(),
            added_seams: Vec::new(),
        };
        let (d, s) = face_distortion(mesh, &atlas)?;
        atlas.face_distortion = d;
        atlas.area_scale = s;
        Ok(atlas)
    }

    /// UVs aligned with mesh faces, scaled by `area_scale`.
    pub fn corner_uvs(&self, face_count: usize) -> Vec<[Uv; 3]> {
        let mut out = vec![[[0.0; 2]; 3]; face_count];
        for chart in &self.charts {
            for (&f, uv) in chart.faces.iter().zip(&chart.corner_uvs) {
                out[f] = uv.map(|p| [p[0] * self.area_scale, p[1] * self.area_scale]);
            }
        }
        out
    }

    pub fn shell_count(&self) -> usize {
        self.charts.len()
    }

    pub fn avg_distortion(&self) -> f64 {
        avg_distortion(&self.face_distortion)
    }
}

/// Boundary loops of a mesh, each following the face winding. Loops are
/// ordered by their smallest vertex index and start at that vertex.
pub fn boundary_loops(mesh: &Mesh) -> Result<Vec<Vec<usize>>> {
    let n = mesh.vertex_count();
    let mut next = vec![usize::MAX; n];
    for e in 0..mesh.edge_count() {
        let (f, None) = mesh.edge_faces(e) else {
            continue;
        };
        let [a, b] = mesh.edges()[e];
        let face = mesh.faces()[f];
        let k = face.iter().position(|&v| v == a).unwrap();
        let (from, to) = if face[(k + 1) % 3] == b {
            (a, b)
        } else {
            (b, a)
        };
        if next[from] != usize::MAX {
            return Err(Error::NonManifoldBoundary(from));
        }
        next[from] = to;
    }
    let mut visited = vec![false; n];
    let mut loops = Vec::new();
    for start in 0..n {
        if next[start] == usize::MAX || visited[start] {
            continue;
        }
        let mut lp = Vec::new();
        let mut v = start;
        while !visited[v] {
            visited[v] = true;
            lp.push(v);
            v = next[v];
            if v == usize::MAX {
                return Err(Error::NonManifoldBoundary(*lp.last().unwrap()));
            }
        }
        if v != start {
            return Err(Error::NonManifoldBoundary(v));
        }
        loops.push(lp);
    }
    Ok(loops)
}

/// Result of a Tutte embedding.
#[derive(Debug, Clone)]
pub struct TutteEmbedding {
    pub uvs: Vec<Uv>,
    pub residual: f64,
    /// More than one boundary loop or non-disk topology.
    pub approximate: bool,
}

/// Uniform-weight Tutte embedding of a shell with at least one boundary loop.
pub fn tutte_embed(mesh: &Mesh) -> Result<TutteEmbedding> {
    let loops = boundary_loops(mesh)?;
    if loops.is_empty() {
        return Err(Error::ClosedShell);
    }
    let loop_len = |lp: &[usize]| -> f64 {
        (0..lp.len())
            .map(|i| {
                geom::distance(
                    mesh.vertices()[lp[i]],
                    mesh.vertices()[lp[(i + 1) % lp.len()]],
                )
            })
            .sum()
    };
    let mut pinned_loop = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, lp) in loops.iter().enumerate() {
        let l = loop_len(lp);
        if l > best {
            best = l;
            pinned_loop = i;
        }
    }
    let approximate = loops.len() != 1 || mesh.euler_characteristic() != 1;

    let n = mesh.vertex_count();
    let mut uvs = vec![[0.0; 2]; n];
    let mut pinned = vec![false; n];
    let lp = &loops[pinned_loop];
    let total = best;
    let mut acc = 0.0;
    for (i, &v) in lp.iter().enumerate() {
        let t = if total > 0.0 {
            acc / total
        } else {
            i as f64 / lp.len() as f64
        };
        let a = std::f64::consts::TAU * t;
        uvs[v] = [a.cos(), a.sin()];
        pinned[v] = true;
        acc += geom::distance(mesh.vertices()[v], mesh.vertices()[lp[(i + 1) % lp.len()]]);
    }

    let free: Vec<usize> = (0..n).filter(|&v| !pinned[v]).collect();
    if free.is_empty() {
        return Ok(TutteEmbedding {
            uvs,
            residual: 0.0,
            approximate,
        });
    }
    let mut slot = vec![usize::MAX; n];
    for (i, &v) in free.iter().enumerate() {
        slot[v] = i;
    }
    let mut triplets = Vec::new();
    let mut rhs_u = vec![0.0; free.len()];
    let mut rhs_v = vec![0.0; free.len()];
    for (i, &v) in free.iter().enumerate() {
        triplets.push((i, i, mesh.vertex_degree(v) as f64));
        for w in mesh.neighbors(v) {
            if pinned[w] {
                rhs_u[i] += uvs[w][0];
                rhs_v[i] += uvs[w][1];
            } else {
                triplets.push((i, slot[w], -1.0));
            }
        }
    }
    let lap = Csr::from_triplets(free.len(), free.len(), &triplets);
    let max_iter = 20 * free.len() + 200;
    let su = conjugate_gradient(&lap, &rhs_u, None, 1e-13, max_iter);
    let sv = conjugate_gradient(&lap, &rhs_v, None, 1e-13, max_iter);
    let residual = su.residual.max(sv.residual);
    if residual > TUTTE_RESIDUAL || !residual.is_finite() {
        return Err(Error::SolverFailed(residual));
    }
    for (i, &v) in free.iter().enumerate() {
        uvs[v] = [su.x[i], sv.x[i]];
    }
    Ok(TutteEmbedding {
        uvs,
        residual,
        approximate,
    })
}

/// Cut path that opens a closed shell: a BFS shortest path between two
/// approximately farthest vertices (double sweep). Returns vertex pairs of the
/// path edges; empty when the shell already has a boundary.
pub fn fallback_cut(mesh: &Mesh) -> Result<Vec<[usize; 2]>> {
    if !mesh.is_closed() {
        return Ok(Vec::new());
    }
    let bfs = |src: usize| -> (Vec<usize>, Vec<usize>) {
        let mut dist = vec![usize::MAX; mesh.vertex_count()];
        let mut parent = vec![usize::MAX; mesh.vertex_count()];
        let mut q = VecDeque::from([src]);
        dist[src] = 0;
        while let Some(v) = q.pop_front() {
            let mut nbrs: Vec<usize> = mesh.neighbors(v).collect();
            nbrs.sort_unstable();
            for w in nbrs {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    parent[w] = v;
                    q.push_back(w);
                }
            }
        }
        (dist, parent)
    };
    let farthest = |dist: &[usize]| {
        let mut best = 0;
        for (v, &d) in dist.iter().enumerate() {
            if d != usize::MAX && d > dist[best] {
                best = v;
            }
        }
        best
    };
    let start = (0..mesh.vertex_count())
        .find(|&v| !mesh.vertex_faces(v).is_empty())
        .ok_or(Error::NoFaces)?;
    let (d0, _) = bfs(start);
    let a = farthest(&d0);
    let (da, parent) = bfs(a);
    let b = farthest(&da);
    let mut path = vec![b];
    while *path.last().unwrap() != a {
        path.push(parent[*path.last().unwrap()]);
    }
    // A single cut edge opens nothing: both endpoints keep their fans whole.
    if path.len() == 2 {
        let end = path[1];
        let extra = mesh
            .neighbors(end)
            .filter(|&w| w != path[0])
            .min()
            .expect("closed mesh vertex has several neighbours");
        path.push(extra);
    }
    Ok(path
        .windows(2)
        .map(|w| [w[0].min(w[1]), w[0].max(w[1])])
        .collect())
}

/// Per-face distortion `D_f` and the global scale `s` such that
/// `Σ s²·uv_area = Σ area3d`.
pub fn face_distortion(mesh: &Mesh, atlas: &UvAtlas) -> Result<(Vec<f64>, f64)> {
    let mut uv_area = vec![f64::NAN; mesh.face_count()];
    for chart in &atlas.charts {
        for (&f, uv) in chart.faces.iter().zip(&chart.corner_uvs) {
            uv_area[f] = geom::signed_area_2d(uv[0], uv[1], uv[2]).abs();
        }
    }
    let mut total3d = 0.0;
    let mut total_uv = 0.0;
    let mut area3d = Vec::with_capacity(mesh.face_count());
    for f in 0..mesh.face_count() {
        let a = mesh.face_area(f);
        if a <= 0.0 || !a.is_finite() {
            return Err(Error::DegenerateFace(f));
        }
        if uv_area[f].is_nan() {
            return Err(Error::InvalidArgument(format!(
                "face {f} is not covered by the atlas"
            )));
        }
        total3d += a;
        total_uv += uv_area[f];
        area3d.push(a);
    }
    if total_uv <= 0.0 {
        return Err(Error::InvalidArgument("atlas has zero UV area".into()));
    }
    let s2 = total3d / total_uv;
    let d = uv_area
        .iter()
        .zip(&area3d)
        .map(|(u, a)| s2 * u / a)
        .collect();
    Ok((d, s2.sqrt()))
}

/// Mean of `|D_f − 1|`.
pub fn avg_distortion(d: &[f64]) -> f64 {
    if d.is_empty() {
        return 0.0;
    }
    d.iter().map(|x| (x - 1.0).abs()).sum::<f64>() / d.len() as f64
}

/// Submesh of the given faces plus the local → parent vertex map.
fn extract(mesh: &Mesh, faces: &[usize]) -> Result<(Mesh, Vec<usize>)> {
    let mut remap = vec![usize::MAX; mesh.vertex_count()];
    let mut local_to_parent = Vec::new();
    let mut verts = Vec::new();
    let local_faces = faces
        .iter()
        .map(|&f| {
            mesh.faces()[f].map(|v| {
                if remap[v] == usize::MAX {
                    remap[v] = verts.len();
                    verts.push(mesh.vertices()[v]);
                    local_to_parent.push(v);
                }
                remap[v]
            })
        })
        .collect();
    Ok((Mesh::new(mesh.name(), verts, local_faces)?, local_to_parent))
}

/// Cuts `mesh` along `labels`, flattens every shell and measures distortion.
pub fn unwrap(mesh: &Mesh, labels: &SeamLabels) -> Result<UvAtlas> {
    let part = shells_from_labels(mesh, labels);
    let cut = cut_mesh_with_origin(mesh, labels)?;
    let mut charts = Vec::with_capacity(part.shell_count);
    let mut added_seams = Vec::new();
    for faces in part.shells() {
        let (mut shell, local_to_cut) = extract(&cut.mesh, &faces)?;
        if shell.is_closed() {
            let path = fallback_cut(&shell)?;
            let mut extra = SeamLabels::zeros(shell.edge_count());
            for &[a, b] in &path {
                extra.set(shell.edge_index(a, b).expect("path edge"), true);
                let (oa, ob) = (
                    cut.vertex_origin[local_to_cut[a]],
                    cut.vertex_origin[local_to_cut[b]],
                );
                if let Some(e) = mesh.edge_index(oa, ob) {
                    added_seams.push(e);
                }
            }
            shell = cut_mesh(&shell, &extra)?;
        }
        let emb = tutte_embed(&shell)?;
        charts.push(Chart {
            corner_uvs: shell
                .faces()
                .iter()
                .map(|f| f.map(|v| emb.uvs[v]))
                .collect(),
            faces,
            approximate: emb.approximate,
            residual: emb.residual,
        });
    }
    added_seams.sort_unstable();
    added_seams.dedup();
    let mut atlas = UvAtlas {
        charts,
        area_scale: 1.0,
        face_distortion: Vec::new(),
        added_seams,
    };
    let (d, s) = face_distortion(mesh, &atlas)?;
    atlas.face_distortion = d;
    atlas.area_scale = s;
    Ok(atlas)
}

/// Flattens by orthogonal projection onto the plane through the mesh whose
/// normal is the area-weighted average face normal. Exact for planar meshes.
pub fn planar_atlas(mesh: &Mesh) -> Result<UvAtlas> {
    let mut n = [0.0; 3];
    for f in 0..mesh.face_count() {
        let [a, b, c] = mesh.face_positions(f);
        n = geom::add(n, geom::triangle_normal(a, b, c));
    }
    let n = geom::normalize(n)
        .ok_or_else(|| Error::InvalidArgument("mesh has no dominant plane".into()))?;
    let helper = if n[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let u = geom::normalize(geom::cross(helper, n)).unwrap();
    let v = geom::cross(n, u);
    let uvs = mesh
        .faces()
        .iter()
        .map(|f| {
            f.map(|i| {
                [
                    geom::dot(mesh.vertices()[i], u),
                    geom::dot(mesh.vertices()[i], v),
                ]
            })
        })
        .collect();
    UvAtlas::from_corner_uvs(mesh, uvs)
}

/// Per-face distortion as an ASCII PLY with one coloured triangle per face:
/// blue for compression (`D_f < 1`), white for none, red for stretch, on a
/// `log2` ramp saturating at 2× either way.
pub fn distortion_ply(mesh: &Mesh, distortion: &[f64]) -> Vec<u8> {
    let mut s = String::new();
    let _ = write!(
        s,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
        3 * mesh.face_count(),
        mesh.face_count()
    );
    for (f, &d) in distortion.iter().enumerate().take(mesh.face_count()) {
        let t = d.max(f64::MIN_POSITIVE).log2().clamp(-1.0, 1.0);
        let fade = |x: f64| (255.0 * (1.0 - x.abs())).round() as u8;
        let (r, g, b) = if t >= 0.0 {
            (255, fade(t), fade(t))
        } else {
            (fade(t), fade(t), 255)
        };
        for p in mesh.face_positions(f) {
            let _ = writeln!(s, "{} {} {} {r} {g} {b}", p[0], p[1], p[2]);
        }
    }
    for f in 0..mesh.face_count() {
        let _ = writeln!(s, "3 {} {} {}", 3 * f, 3 * f + 1, 3 * f + 2);
    }
    s.into_bytes()
}
