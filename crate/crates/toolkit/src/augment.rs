//! Gaussian vertex-noise augmentation.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use seamgnn_core::{Mesh, SeamLabels};

use crate::error::{Result, ToolkitError};

/// Largest displacement as a fraction of the bounding-box diagonal.
pub const MAX_DISPLACEMENT: f64 = 0.2;

/// `count` noisy copies of `mesh`. Copy `i` perturbs a random
/// `vertex_fraction` of the vertices with isotropic Gaussian noise of
/// standard deviation `noise_std × diagonal`, each displacement clamped to
/// [`MAX_DISPLACEMENT`] × diagonal. Copy `i` depends only on `(seed, i)`.
pub fn augment(
    mesh: &Mesh,
    labels: &SeamLabels,
    count: usize,
    noise_std: f64,
    vertex_fraction: f64,
    seed: u64,
) -> Result<Vec<(Mesh, SeamLabels)>> {
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(ToolkitError::input("noise_std must be a finite value ≥ 0"));
    }
    if !(vertex_fraction > 0.0 && vertex_fraction <= 1.0) {
        return Err(ToolkitError::input("vertex_fraction must lie in (0, 1]"));
    }
    if labels.len() != mesh.edge_count() {
        return Err(ToolkitError::LengthMismatch {
            what: "labels",
            expected: mesh.edge_count(),
            actual: labels.len(),
        });
    }
    let diag = mesh.bbox_diagonal();
    let limit = MAX_DISPLACEMENT * diag;
    let n = mesh.vertex_count();
    let picks = ((vertex_fraction * n as f64).round() as usize).clamp(1, n);
    let normal =
        Normal::new(0.0, noise_std * diag).map_err(|e| ToolkitError::input(e.to_string()))?;
    (0..count)
        .map(|i| {
            let name = format!("{}_aug{i}", mesh.name());
            if noise_std == 0.0 {
                return Ok((mesh.clone().renamed(name), labels.clone()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut verts = mesh.vertices().to_vec();
            let mut chosen = sample(&mut rng, n, picks).into_vec();
            chosen.sort_unstable();
            for v in chosen {
                let mut d = [
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                ];
                let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                if len > limit {
                    d.iter_mut().for_each(|x| *x *= limit / len);
                }
                for k in 0..3 {
                    verts[v][k] += d[k];
                }
            }
            Ok((mesh.with_positions(verts)?.renamed(name), labels.clone()))
        })
        .collect()
}
