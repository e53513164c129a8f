//! Thinning of thick seam-candidate regions and removal of tiny shells.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::mesh::{shells_from_labels, Mesh, SeamLabels};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonConfig {
    /// Fraction of vertices, by descending probability, kept as candidates.
    pub candidate_fraction: f64,
    /// Hop distance a removed vertex may lie from the surviving set.
    pub max_orphan_distance: usize,
    /// Shells with at most this many faces are merged away.
    pub min_shell_faces: usize,
}

impl Default for SkeletonConfig {
    fn default() -> Self {
        Self {
            candidate_fraction: 0.2,
            max_orphan_distance: 3,
            min_shell_faces: 2,
        }
    }
}

impl SkeletonConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.candidate_fraction > 0.0 && self.candidate_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "candidate fraction {} is outside (0, 1)",
                self.candidate_fraction
            )));
        }
        if self.max_orphan_distance < 1 {
            return Err(Error::InvalidArgument(
                "orphan distance must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

fn check_probs(mesh: &Mesh, probs: &[f64]) -> Result<()> {
    if probs.len() != mesh.edge_count() {
        return Err(Error::LengthMismatch {
            what: "edge probabilities",
            expected: mesh.edge_count(),
            actual: probs.len(),
        });
    }
    Ok(())
}

/// Maximum probability over each vertex's incident edges.
pub fn vertex_probs(mesh: &Mesh, probs: &[f64]) -> Result<Vec<f64>> {
    check_probs(mesh, probs)?;
    Ok((0..mesh.vertex_count())
        .map(|v| {
            mesh.vertex_edges(v)
                .iter()
                .map(|&e| probs[e])
                .fold(0.0, f64::max)
        })
        .collect())
}

/// State of a finished thinning run.
#[derive(Debug, Clone)]
pub struct Thinning {
    pub labels: SeamLabels,
    pub candidates: Vec<bool>,
    pub survivors: Vec<bool>,
}

impl Thinning {
    /// Whether `v` could still be removed under the connectivity and
    /// orphan-distance rules.
    pub fn removable(&self, mesh: &Mesh, v: usize, max_orphan_distance: usize) -> bool {
        let removed: Vec<bool> = self
            .candidates
            .iter()
            .zip(&self.survivors)
            .map(|(&c, &s)| c && !s)
            .collect();
        self.survivors[v] && can_remove(mesh, &self.survivors, &removed, v, max_orphan_distance)
    }
}

/// Thins the candidate set to one-edge-wide curves. See [`thin_detailed`].
pub fn thin(mesh: &Mesh, probs: &[f64], config: &SkeletonConfig) -> Result<SeamLabels> {
    thin_detailed(mesh, probs, config).map(|t| t.labels)
}

/// Keeps the top `candidate_fraction` of vertices by vertex probability, then
/// repeatedly removes the lowest-probability candidate (lower index first on
/// ties) that is not a curve end, whose removal keeps the candidate
/// subgraph's component count, and that leaves every removed vertex within `max_orphan_distance` hops of a
/// survivor. An edge is a seam iff both ends survive and its probability is
/// at least the smallest surviving vertex probability.
pub fn thin_detailed(mesh: &Mesh, probs: &[f64], config: &SkeletonConfig) -> Result<Thinning> {
    config.validate()?;
    let vp = vertex_probs(mesh, probs)?;
    let n = mesh.vertex_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vp[b].total_cmp(&vp[a]).then(a.cmp(&b)));
    let k = ((config.candidate_fraction * n as f64).round() as usize).min(n);
    let mut candidates = vec![false; n];
    for &v in &order[..k] {
        candidates[v] = true;
    }

    let mut survivors = candidates.clone();
    let mut removed = vec![false; n];
    let mut ascending = order[..k].to_vec();
    ascending.sort_by(|&a, &b| vp[a].total_cmp(&vp[b]).then(a.cmp(&b)));
    loop {
        let next = ascending.iter().copied().find(|&v| {
            survivors[v] && can_remove(mesh, &survivors, &removed, v, config.max_orphan_distance)
        });
        let Some(v) = next else { break };
        survivors[v] = false;
        removed[v] = true;
    }

    let min_prob = (0..n)
        .filter(|&v| survivors[v])
        .map(|v| vp[v])
        .fold(f64::INFINITY, f64::min);
    let mut labels = SeamLabels::zeros(mesh.edge_count());
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        if survivors[a] && survivors[b] && probs[e] >= min_prob {
            labels.set(e, true);
        }
    }
    Ok(Thinning {
        labels,
        candidates,
        survivors,
    })
}

fn can_remove(
    mesh: &Mesh,
    survivors: &[bool],
    removed: &[bool],
    v: usize,
    max_orphan: usize,
) -> bool {
    keeps_components(mesh, survivors, v)
        && keeps_orphans_close(mesh, survivors, removed, v, max_orphan)
}

/// Removing `v` leaves the component count unchanged iff `v` has a surviving
/// neighbour and all its surviving neighbours stay mutually connected. Curve
/// ends (exactly one surviving neighbour) are kept so branches do not erode.
fn keeps_components(mesh: &Mesh, survivors: &[bool], v: usize) -> bool {
    let nbrs: Vec<usize> = mesh.neighbors(v).filter(|&w| survivors[w]).collect();
    if nbrs.len() < 2 {
        return false;
    }
    let start = nbrs[0];
    let mut seen = vec![false; mesh.vertex_count()];
    seen[v] = true;
    seen[start] = true;
    let mut remaining = nbrs.len() - 1;
    let mut stack = vec![start];
    while let Some(x) = stack.pop() {
        for w in mesh.neighbors(x) {
            if survivors[w] && !seen[w] {
                seen[w] = true;
                if nbrs.contains(&w) {
                    remaining -= 1;
                    if remaining == 0 {
                        return true;
                    }
                }
                stack.push(w);
            }
        }
    }
    false
}

/// Only removed vertices within `max_orphan` hops of `v` (and `v` itself)
/// can lose their nearest survivor when `v` goes.
fn keeps_orphans_close(
    mesh: &Mesh,
    survivors: &[bool],
    removed: &[bool],
    v: usize,
    max_orphan: usize,
) -> bool {
    let near = ball(mesh, v, max_orphan);
    near.into_iter()
        .filter(|&(u, _)| u == v || removed[u])
        .all(|(u, _)| {
            ball(mesh, u, max_orphan)
                .into_iter()
                .any(|(w, _)| w != v && survivors[w])
        })
}

/// Vertices within `radius` hops of `src`, with their distances.
fn ball(mesh: &Mesh, src: usize, radius: usize) -> Vec<(usize, usize)> {
    let mut out = vec![(src, 0)];
    let mut queue = VecDeque::from([(src, 0)]);
    let mut seen = std::collections::HashSet::from([src]);
    while let Some((x, d)) = queue.pop_front() {
        if d == radius {
            continue;
        }
        for w in mesh.neighbors(x) {
            if seen.insert(w) {
                out.push((w, d + 1));
                queue.push_back((w, d + 1));
            }
        }
    }
    out
}

/// Clears the boundary seams of every shell with at most `min_shell_faces`
/// faces, merging it into its neighbours, until none is left. Shells that
/// have no seam boundary (whole connected components) are left alone.
pub fn purge_tiny_shells(mesh: &Mesh, labels: &SeamLabels, min_shell_faces: usize) -> SeamLabels {
    let mut out = labels.clone();
    loop {
        let part = shells_from_labels(mesh, &out);
        let sizes = part.shell_sizes();
        let mut changed = false;
        for e in 0..mesh.edge_count() {
            if !out.get(e) {
                continue;
            }
            let (f0, Some(f1)) = mesh.edge_faces(e) else {
                continue;
            };
            let (s0, s1) = (part.face_to_shell[f0], part.face_to_shell[f1]);
            if s0 != s1 && (sizes[s0] <= min_shell_faces || sizes[s1] <= min_shell_faces) {
                out.set(e, false);
                changed = true;
            }
        }
        if !changed {
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::induced_components;
    use crate::shapes;

    fn grid_probs(m: &Mesh, hot: impl Fn(usize) -> bool) -> Vec<f64> {
        m.edges()
            .iter()
            .map(|&[a, b]| if hot(a) && hot(b) { 0.9 } else { 0.1 })
            .collect()
    }

    #[test]
    fn vertex_probs_take_the_max() {
        let m = shapes::grid(1, 1, 1.0);
        let mut p = vec![0.2; m.edge_count()];
        p[m.edge_index(0, 1).unwrap()] = 0.9;
        let vp = vertex_probs(&m, &p).unwrap();
        assert_eq!(vp[0], 0.9);
        assert_eq!(vp[1], 0.9);
        assert_eq!(vp[2], 0.2);
        assert!(vertex_probs(&m, &vec![0.0; m.edge_count()])
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
        assert!(vertex_probs(&m, &vec![0.4; m.edge_count()])
            .unwrap()
            .iter()
            .all(|&x| x == 0.4));
    }

    #[test]
    fn config_validation() {
        assert!(SkeletonConfig::default().validate().is_ok());
        let bad = SkeletonConfig {
            candidate_fraction: 1.0,
            ..SkeletonConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SkeletonConfig {
            max_orphan_distance: 0,
            ..SkeletonConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn empty_candidate_set_gives_no_seams() {
        let m = shapes::grid(1, 1, 1.0);
        let cfg = SkeletonConfig {
            candidate_fraction: 0.05,
            ..SkeletonConfig::default()
        };
        let out = thin(&m, &vec![0.0; m.edge_count()], &cfg).unwrap();
        assert_eq!(out.count(), 0);
    }

    #[test]
    fn simple_path_is_a_fixed_point() {
        // Row j = 3 of a 10 × 6 grid: 11 vertices out of 77.
        let m = shapes::grid(10, 6, 1.0);
        let on_path = |v: usize| v / 11 == 3;
        let probs = grid_probs(&m, on_path);
        let cfg = SkeletonConfig {
            candidate_fraction: 11.0 / 77.0,
            ..SkeletonConfig::default()
        };
        let t = thin_detailed(&m, &probs, &cfg).unwrap();
        assert!((0..m.vertex_count()).all(|v| t.survivors[v] == on_path(v)));
        assert_eq!(t.labels.count(), 10);
    }

    #[test]
    fn strip_thins_to_single_edges() {
        // Rows j = 2 and 3 of a 12 × 6 grid.
        let m = shapes::grid(12, 6, 1.0);
        let hot = |v: usize| matches!(v / 13, 2 | 3);
        let probs = grid_probs(&m, hot);
        let cfg = SkeletonConfig {
            candidate_fraction: 26.0 / 91.0,
            ..SkeletonConfig::default()
        };
        let t = thin_detailed(&m, &probs, &cfg).unwrap();
        assert_eq!(
            induced_components(&m, &t.candidates),
            induced_components(&m, &t.survivors)
        );
        for v in 0..m.vertex_count() {
            assert!(
                !t.removable(&m, v, cfg.max_orphan_distance),
                "vertex {v} still removable"
            );
        }
        let survivors = t.survivors.iter().filter(|&&s| s).count();
        assert!(survivors < 26);
        // Seam subgraph is a tree on the survivors.
        assert_eq!(t.labels.count() + 1, survivors);
        for e in t.labels.seam_edges() {
            let [a, b] = m.edges()[e];
            assert!(t.candidates[a] && t.candidates[b]);
        }
    }

    #[test]
    fn tiny_shell_is_merged() {
        let m = shapes::grid(3, 3, 1.0);
        // Isolate face 0 (triangle 0-1-5).
        let l = SeamLabels::from_edges(&m, &[[1, 5]]).unwrap();
        let mut labels = l.clone();
        labels.set(m.edge_index(0, 5).unwrap(), true);
        labels.set(m.edge_index(0, 1).unwrap(), true);
        assert_eq!(shells_from_labels(&m, &labels).shell_count, 2);
        let out = purge_tiny_shells(&m, &labels, 2);
        assert_eq!(shells_from_labels(&m, &out).shell_count, 1);
    }

    #[test]
    fn no_tiny_shells_is_unchanged() {
        let (m, eq) = shapes::icosphere_with_equator(1);
        assert_eq!(purge_tiny_shells(&m, &eq, 2), eq);
    }

    #[test]
    fn fan_of_tiny_shells_reaches_a_fixpoint() {
        // A fan of single-face shells around a vertex, inside a larger shell.
        let m = shapes::disk(3, 8);
        let mut labels = SeamLabels::zeros(m.edge_count());
        for s in 0..8 {
            labels.set(m.edge_index(0, 1 + s).unwrap(), true);
        }
        for s in 0..8 {
            labels.set(m.edge_index(1 + s, 1 + (s + 1) % 8).unwrap(), true);
        }
        let before = shells_from_labels(&m, &labels);
        assert_eq!(before.shell_count, 9);
        let out = purge_tiny_shells(&m, &labels, 2);
        let after = shells_from_labels(&m, &out);
        assert!(after.shell_sizes().iter().all(|&s| s > 2) || after.shell_count == 1);
        assert!(after.shell_count < before.shell_count);
    }
}
