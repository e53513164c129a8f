//! Parametric shapes with constructive seam ground truth.
//!
//! Every shape is a surface of revolution around +z: rings of `segments`
//! vertices closed by an apex vertex at each end. Vertical cuts run along
//! the column at azimuth 0 (the +x side).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seamgnn_core::geom::Vec3;
use seamgnn_core::{Mesh, SeamLabels};
use serde::{Deserialize, Serialize};

use crate::augment::augment;
use crate::dataset::{Dataset, Split};
use crate::error::{Result, ToolkitError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    /// Capped cylinder: vertical cut plus both cap rims; 3 shells.
    Cylinder,
    /// Cylinder with hemispherical ends: ring cuts where the ends meet the
    /// body plus a vertical cut along the body; 3 shells.
    Capsule,
    /// Sphere cut along its equator; 2 shells.
    SphereBand,
    /// Sphere with smooth radial bumps, cut along its equator; 2 shells.
    LumpySphere,
}

impl SynthKind {
    pub const ALL: [SynthKind; 4] = [
        Self::Cylinder,
        Self::Capsule,
        Self::SphereBand,
        Self::LumpySphere,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Cylinder => "cylinder",
            Self::Capsule => "capsule",
            Self::SphereBand => "sphere_band",
            Self::LumpySphere => "lumpy_sphere",
        }
    }

    /// Shell count of the constructed labels.
    pub fn expected_shells(self) -> usize {
        match self {
            Self::Cylinder | Self::Capsule => 3,
            Self::SphereBand | Self::LumpySphere => 2,
        }
    }
}

impl std::str::FromStr for SynthKind {
    type Err = ToolkitError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ToolkitError::input(format!("unknown synthetic kind {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthParams {
    /// Vertices per ring.
    pub segments: usize,
    /// Bands along the cylindrical body, or latitude bands of a sphere
    /// (even).
    pub rings: usize,
    pub radius: f64,
    /// Length of the cylindrical body.
    pub height: f64,
    /// Relative amplitude of the radial bumps of `LumpySphere`.
    pub noise: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            segments: 16,
            rings: 8,
            radius: 1.0,
            height: 2.0,
            noise: 0.15,
        }
    }
}

impl SynthParams {
    fn validate(&self, kind: SynthKind) -> Result<()> {
        if self.segments < 3 || self.rings < 1 {
            return Err(ToolkitError::input(
                "resolution needs segments ≥ 3 and rings ≥ 1",
            ));
        }
        if matches!(kind, SynthKind::SphereBand | SynthKind::LumpySphere)
            && (self.rings < 2 || !self.rings.is_multiple_of(2))
        {
            return Err(ToolkitError::input("sphere rings must be even and ≥ 2"));
        }
        if !(self.radius > 0.0 && self.height > 0.0 && self.noise >= 0.0 && self.noise < 1.0) {
            return Err(ToolkitError::input(
                "radius and height must be positive and noise in [0, 1)",
            ));
        }
        Ok(())
    }
}

/// Profile of a surface of revolution: ring `(radius, z)` pairs from bottom
/// to top, and the apex heights.
struct Profile {
    rings: Vec<(f64, f64)>,
    bottom: f64,
    top: f64,
}

/// Ring index set and vertical cut span `(from_ring, to_ring)`.
struct Cuts {
    rings: Vec<usize>,
    vertical: Option<(usize, usize)>,
}

fn revolve(name: &str, profile: &Profile, n: usize, cuts: &Cuts) -> Result<(Mesh, SeamLabels)> {
    let m = profile.rings.len();
    let mut verts: Vec<Vec3> = Vec::with_capacity(m * n + 2);
    for &(r, z) in &profile.rings {
        for j in 0..n {
            let t = 2.0 * PI * j as f64 / n as f64;
            verts.push([r * t.cos(), r * t.sin(), z]);
        }
    }
    let (bottom, top) = (m * n, m * n + 1);
    verts.push([0.0, 0.0, profile.bottom]);
    verts.push([0.0, 0.0, profile.top]);
    let at = |i: usize, j: usize| i * n + j % n;
    let mut faces = Vec::with_capacity(2 * n * m);
    for j in 0..n {
        faces.push([bottom, at(0, j + 1), at(0, j)]);
    }
    for i in 0..m - 1 {
        for j in 0..n {
            faces.push([at(i, j), at(i, j + 1), at(i + 1, j + 1)]);
            faces.push([at(i, j), at(i + 1, j + 1), at(i + 1, j)]);
        }
    }
    for j in 0..n {
        faces.push([top, at(m - 1, j), at(m - 1, j + 1)]);
    }
    let mesh = Mesh::new(name, verts, faces)?;
    let mut seams = Vec::new();
    for &i in &cuts.rings {
        seams.extend((0..n).map(|j| [at(i, j), at(i, j + 1)]));
    }
    if let Some((a, b)) = cuts.vertical {
        seams.extend((a..b).map(|i| [at(i, 0), at(i + 1, 0)]));
    }
    let labels = SeamLabels::from_edges(&mesh, &seams)?;
    Ok((mesh, labels))
}

/// Latitude rings of a hemisphere of radius `r` centred at height `z0`,
/// excluding the pole and ordered away from it; the last ring is the rim.
fn hemisphere_rings(r: f64, z0: f64, bands: usize, upward: bool) -> Vec<(f64, f64)> {
    (1..=bands)
        .map(|k| {
            let phi = (PI / 2.0) * (1.0 - k as f64 / bands as f64);
            let z = r * phi.sin();
            (r * phi.cos(), if upward { z0 + z } else { z0 - z })
        })
        .collect()
}

/// Builds the shape of `kind`. Only `LumpySphere` depends on `seed`.
pub fn gen_synthetic(
    kind: SynthKind,
    params: &SynthParams,
    seed: u64,
) -> Result<(Mesh, SeamLabels)> {
    params.validate(kind)?;
    let (n, r, h) = (params.segments, params.radius, params.height);
    let body =
        |z0: f64| (0..=params.rings).map(move |i| (r, z0 + h * i as f64 / params.rings as f64));
    match kind {
        SynthKind::Cylinder => {
            let profile = Profile {
                rings: body(0.0).collect(),
                bottom: 0.0,
                top: h,
            };
            let last = params.rings;
            revolve(
                kind.name(),
                &profile,
                n,
                &Cuts {
                    rings: vec![0, last],
                    vertical: Some((0, last)),
                },
            )
        }
        SynthKind::Capsule => {
            let bands = (n / 4).max(2);
            let mut rings: Vec<(f64, f64)> = hemisphere_rings(r, 0.0, bands, false);
            rings.pop();
            let first = rings.len();
            rings.extend(body(0.0));
            let last = rings.len() - 1;
            let mut cap = hemisphere_rings(r, h, bands, true);
            cap.pop();
            rings.extend(cap.into_iter().rev());
            let profile = Profile {
                rings,
                bottom: -r,
                top: h + r,
            };
            revolve(
                kind.name(),
                &profile,
                n,
                &Cuts {
                    rings: vec![first, last],
                    vertical: Some((first, last)),
                },
            )
        }
        SynthKind::SphereBand | SynthKind::LumpySphere => {
            let bands = params.rings;
            let rings: Vec<(f64, f64)> = (1..bands)
                .map(|k| {
                    let phi = -PI / 2.0 + PI * k as f64 / bands as f64;
                    (r * phi.cos(), r * phi.sin())
                })
                .collect();
            let profile = Profile {
                rings,
                bottom: -r,
                top: r,
            };
            let (mesh, labels) = revolve(
                kind.name(),
                &profile,
                n,
                &Cuts {
                    rings: vec![bands / 2 - 1],
                    vertical: None,
                },
            )?;
            if kind == SynthKind::SphereBand || params.noise == 0.0 {
                return Ok((mesh, labels));
            }
            Ok((lumpy(&mesh, params.noise, seed)?, labels))
        }
    }
}

/// Scales every vertex radially by `1 + noise · f(direction)` where `f` is
/// a sum of seeded Gaussian bumps with values in (−1, 1).
fn lumpy(mesh: &Mesh, noise: f64, seed: u64) -> Result<Mesh> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(Vec3, f64)> = (0..6)
        .map(|_| {
            let z: f64 = rng.random_range(-1.0..1.0);
            let t: f64 = rng.random_range(0.0..2.0 * PI);
            let s = (1.0 - z * z).sqrt();
            ([s * t.cos(), s * t.sin(), z], rng.random_range(-1.0..1.0))
        })
        .collect();
    let verts = mesh
        .vertices()
        .iter()
        .map(|p| {
            let len = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            let d = [p[0] / len, p[1] / len, p[2] / len];
            let f: f64 = bumps
                .iter()
                .map(|(c, a)| {
                    let dist2 =
                        (d[0] - c[0]).powi(2) + (d[1] - c[1]).powi(2) + (d[2] - c[2]).powi(2);
                    a * (-dist2 / 0.5).exp()
                })
                .sum::<f64>()
                .tanh();
            let s = 1.0 + noise * f;
            [p[0] * s, p[1] * s, p[2] * s]
        })
        .collect();
    Ok(mesh.with_positions(verts)?)
}

/// Recipe for a split synthetic dataset of cylinders and capsules with
/// varied proportions. Training meshes get one noisy augmented copy each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSetConfig {
    pub kinds: Vec<SynthKind>,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub segments: usize,
    pub rings: usize,
    pub radius_range: (f64, f64),
    pub height_range: (f64, f64),
    /// Augmentation noise std relative to the bounding-box diagonal.
    pub noise_std: f64,
    pub vertex_fraction: f64,
    pub seed: u64,
}

impl Default for SynthSetConfig {
    fn default() -> Self {
        Self {
            kinds: vec![SynthKind::Cylinder, SynthKind::Capsule],
            train: 20,
            val: 3,
            test: 5,
            segments: 12,
            rings: 6,
            radius_range: (0.6, 1.4),
            height_range: (1.0, 3.0),
            noise_std: 0.005,
            vertex_fraction: 0.5,
            seed: 42,
        }
    }
}

/// Builds the dataset described by `cfg`. Meshes cycle through `cfg.kinds`
/// within each split and are named `<kind>_<split>_<index>`.
pub fn synthetic_set(cfg: &SynthSetConfig) -> Result<Dataset> {
    if cfg.kinds.is_empty() {
        return Err(ToolkitError::input(
            "synthetic set needs at least one shape kind",
        ));
    }
    let ordered = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a < b;
    if !ordered(cfg.radius_range) || !ordered(cfg.height_range) {
        return Err(ToolkitError::input(
            "radius and height ranges must be increasing",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ds = Dataset::new();
    for (split, count) in [
        (Split::Train, cfg.train),
        (Split::Val, cfg.val),
        (Split::Test, cfg.test),
    ] {
        for i in 0..count {
            let kind = cfg.kinds[i % cfg.kinds.len()];
            let params = SynthParams {
                segments: cfg.segments,
                rings: cfg.rings,
                radius: rng.random_range(cfg.radius_range.0..cfg.radius_range.1),
                height: rng.random_range(cfg.height_range.0..cfg.height_range.1),
                ..SynthParams::default()
            };
            let (mut mesh, mut labels) =
                gen_synthetic(kind, &params, cfg.seed.wrapping_add(i as u64))?;
            if split == Split::Train && cfg.noise_std > 0.0 {
                (mesh, labels) = augment(
                    &mesh,
                    &labels,
                    1,
                    cfg.noise_std,
                    cfg.vertex_fraction,
                    i as u64,
                )?
                .remove(0);
            }
            ds.push(
                mesh.renamed(format!("{}_{split}_{i:02}", kind.name())),
                labels,
                split,
            )?;
        }
    }
    Ok(ds)
}
