//! Quadric-error-metric edge-collapse decimation that keeps seams intact.
//!
//! Seam edges never collapse. A vertex touching a seam or the mesh boundary
//! is pinned: it may absorb a free neighbour but never moves, and an edge
//! between two pinned vertices is never collapsed. Collapses that break the
//! link condition or flip a face are rejected.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use seamgnn_core::geom::{self, Vec3};
use seamgnn_core::{Mesh, SeamLabels};

use crate::error::{Result, ToolkitError};

/// Allowed relative deviation of the final face count from the target.
pub const TARGET_TOLERANCE: f64 = 0.02;

type Quadric = [f64; 10];

fn plane_quadric(n: Vec3, d: f64, w: f64) -> Quadric {
    let p = [n[0], n[1], n[2], d];
    let mut q = [0.0; 10];
    let mut k = 0;
    for i in 0..4 {
        for j in i..4 {
            q[k] = w * p[i] * p[j];
            k += 1;
        }
    }
    q
}

fn q_add(a: &Quadric, b: &Quadric) -> Quadric {
    std::array::from_fn(|i| a[i] + b[i])
}

fn q_eval(q: &Quadric, x: Vec3) -> f64 {
    let p = [x[0], x[1], x[2], 1.0];
    let mut s = 0.0;
    let mut k = 0;
    for i in 0..4 {
        for j in i..4 {
            let f = if i == j { 1.0 } else { 2.0 };
            s += f * q[k] * p[i] * p[j];
            k += 1;
        }
    }
    s
}

/// Minimizer of the quadric, if its 3×3 block is well conditioned.
fn q_optimum(q: &Quadric) -> Option<Vec3> {
    let a = [[q[0], q[1], q[2]], [q[1], q[4], q[5]], [q[2], q[5], q[7]]];
    let b = [-q[3], -q[6], -q[8]];
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    let scale = a.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 || d.abs() < 1e-10 * scale.powi(3) {
        return None;
    }
    let mut x = [0.0; 3];
    for (c, xc) in x.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][c] = b[r];
        }
        *xc = det(m) / d;
    }
    Some(x)
}

#[derive(Debug, PartialEq)]
struct Candidate {
    cost: f64,
    keep: usize,
    drop: usize,
    target: Vec3,
    stamps: (u64, u64),
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| (other.keep, other.drop).cmp(&(self.keep, self.drop)))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn key(a: usize, b: usize) -> [usize; 2] {
    [a.min(b), a.max(b)]
}

struct State {
    pos: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vertex_faces: Vec<Vec<usize>>,
    quadric: Vec<Quadric>,
    pinned_boundary: Vec<bool>,
    seams: HashSet<[usize; 2]>,
    seam_degree: Vec<usize>,
    stamp: Vec<u64>,
    alive_faces: usize,
}

impl State {
    fn new(mesh: &Mesh, labels: &SeamLabels) -> Self {
        let n = mesh.vertex_count();
        let mut quadric = vec![[0.0; 10]; n];
        for (f, tri) in mesh.faces().iter().enumerate() {
            let [a, b, c] = mesh.face_positions(f);
            let cr = geom::triangle_normal(a, b, c);
            let area = geom::norm(cr) / 2.0;
            if let Some(nrm) = geom::normalize(cr) {
                let q = plane_quadric(nrm, -geom::dot(nrm, a), area);
                for &v in tri {
                    quadric[v] = q_add(&quadric[v], &q);
                }
            }
        }
        let mut seams = HashSet::new();
        let mut seam_degree = vec![0; n];
        for e in labels.seam_edges() {
            let [a, b] = mesh.edges()[e];
            seams.insert([a, b]);
            seam_degree[a] += 1;
            seam_degree[b] += 1;
        }
        Self {
            pos: mesh.vertices().to_vec(),
            faces: mesh.faces().to_vec(),
            face_alive: vec![true; mesh.face_count()],
            vertex_faces: (0..n).map(|v| mesh.vertex_faces(v).to_vec()).collect(),
            quadric,
            pinned_boundary: mesh.boundary_vertices(),
            seams,
            seam_degree,
            stamp: vec![0; n],
            alive_faces: mesh.face_count(),
        }
    }

    fn pinned(&self, v: usize) -> bool {
        self.pinned_boundary[v] || self.seam_degree[v] > 0
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.vertex_faces[v]
            .iter()
            .flat_map(|&f| self.faces[f])
            .filter(|&u| u != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn candidate(&self, a: usize, b: usize) -> Option<Candidate> {
        if self.seams.contains(&key(a, b)) {
            return None;
        }
        let q = q_add(&self.quadric[a], &self.quadric[b]);
        let (keep, drop, target) = match (self.pinned(a), self.pinned(b)) {
            (true, true) => return None,
            (true, false) => (a, b, self.pos[a]),
            (false, true) => (b, a, self.pos[b]),
            (false, false) => {
                let (pa, pb) = (self.pos[a], self.pos[b]);
                let mid = geom::scale(geom::add(pa, pb), 0.5);
                let mut best = [pa, pb, mid];
                if let Some(x) = q_optimum(&q) {
                    best[2] = x;
                }
                let t = best
                    .into_iter()
                    .min_by(|x, y| q_eval(&q, *x).total_cmp(&q_eval(&q, *y)))
                    .unwrap();
                (a.min(b), a.max(b), t)
            }
        };
        Some(Candidate {
            cost: q_eval(&q, target).max(0.0),
            keep,
            drop,
            target,
            stamps: (self.stamp[keep], self.stamp[drop]),
        })
    }

    /// Link condition plus face-flip check for collapsing `drop` into `keep`.
    fn collapse_ok(&self, keep: usize, drop: usize, target: Vec3) -> bool {
        let shared: Vec<usize> = self.vertex_faces[drop]
            .iter()
            .copied()
            .filter(|&f| self.faces[f].contains(&keep))
            .collect();
        if shared.is_empty() || self.alive_faces - shared.len() < 4 {
            return false;
        }
        let opposite: HashSet<usize> = shared
            .iter()
            .flat_map(|&f| self.faces[f])
            .filter(|&v| v != keep && v != drop)
            .collect();
        let nk: HashSet<usize> = self.neighbors(keep).into_iter().collect();
        let common = self
            .neighbors(drop)
            .into_iter()
            .filter(|v| nk.contains(v))
            .count();
        if common != opposite.len() {
            return false;
        }
        for &moved in &[drop, keep] {
            for &f in &self.vertex_faces[moved] {
                if shared.contains(&f) {
                    continue;
                }
                let tri = self.faces[f];
                let p = tri.map(|v| self.pos[v]);
                let q = tri.map(|v| if v == moved { target } else { self.pos[v] });
                let before = geom::triangle_normal(p[0], p[1], p[2]);
                let after = geom::triangle_normal(q[0], q[1], q[2]);
                let floor = 1e-12 * geom::dot(before, before).max(f64::MIN_POSITIVE);
                if geom::dot(before, after) <= floor {
                    return false;
                }
            }
        }
        true
    }

    fn collapse(&mut self, keep: usize, drop: usize, target: Vec3) {
        for f in std::mem::take(&mut self.vertex_faces[drop]) {
            if self.faces[f].contains(&keep) {
                self.face_alive[f] = false;
                self.alive_faces -= 1;
                for v in self.faces[f] {
                    if v != drop {
                        self.vertex_faces[v].retain(|&g| g != f);
                    }
                }
            } else {
                for v in self.faces[f].iter_mut() {
                    if *v == drop {
                        *v = keep;
                    }
                }
                self.vertex_faces[keep].push(f);
            }
        }
        let moved: Vec<[usize; 2]> = self
            .seams
            .iter()
            .copied()
            .filter(|s| s.contains(&drop))
            .collect();
        for s in moved {
            self.seams.remove(&s);
            let w = if s[0] == drop { s[1] } else { s[0] };
            self.seam_degree[drop] -= 1;
            if self.seams.insert(key(keep, w)) {
                self.seam_degree[keep] += 1;
            } else {
                self.seam_degree[w] -= 1;
            }
        }
        self.pos[keep] = target;
        self.quadric[keep] = q_add(&self.quadric[keep], &self.quadric[drop]);
        self.stamp[keep] += 1;
        self.stamp[drop] += 1;
    }
}

/// Collapses edges by increasing quadric error until the face count is at
/// most `target_faces`. Fails with [`ToolkitError::TargetUnreachable`] if
/// the constraints stop it more than 2% above the target.
pub fn decimate(
    mesh: &Mesh,
    labels: &SeamLabels,
    target_faces: usize,
) -> Result<(Mesh, SeamLabels)> {
    if labels.len() != mesh.edge_count() {
        return Err(ToolkitError::LengthMismatch {
            what: "seam labels",
            expected: mesh.edge_count(),
            actual: labels.len(),
        });
    }
    if target_faces < 4 || target_faces > mesh.face_count() {
        return Err(ToolkitError::input(format!(
            "target face count {target_faces} must lie in [4, {}]",
            mesh.face_count()
        )));
    }
    if target_faces == mesh.face_count() {
        return Ok((mesh.clone(), labels.clone()));
    }

    let mut st = State::new(mesh, labels);
    let mut heap = BinaryHeap::new();
    for &[a, b] in mesh.edges() {
        heap.extend(st.candidate(a, b));
    }
    while st.alive_faces > target_faces {
        let Some(c) = heap.pop() else { break };
        if c.stamps != (st.stamp[c.keep], st.stamp[c.drop])
            || !st.collapse_ok(c.keep, c.drop, c.target)
        {
            continue;
        }
        st.collapse(c.keep, c.drop, c.target);
        for u in st.neighbors(c.keep) {
            heap.extend(st.candidate(c.keep, u));
        }
    }

    let achieved = st.alive_faces;
    if achieved as f64 > target_faces as f64 * (1.0 + TARGET_TOLERANCE) {
        return Err(ToolkitError::TargetUnreachable {
            target: target_faces,
            achieved,
        });
    }

    let mut remap = HashMap::new();
    let mut verts = Vec::new();
    let mut faces = Vec::with_capacity(achieved);
    for (f, tri) in st.faces.iter().enumerate() {
        if !st.face_alive[f] {
            continue;
        }
        faces.push(tri.map(|v| {
            *remap.entry(v).or_insert_with(|| {
                verts.push(st.pos[v]);
                verts.len() - 1
            })
        }));
    }
    let out = Mesh::new(mesh.name(), verts, faces)?;
    let mut seams: Vec<[usize; 2]> = st.seams.iter().map(|s| s.map(|v| remap[&v])).collect();
    seams.sort_unstable();
    let out_labels = SeamLabels::from_edges(&out, &seams)?;
    Ok((out, out_labels))
}
