//! Labeled mesh collections on disk.
//!
//! A dataset directory holds one subdirectory per split (`train`, `val`,
//! `test`). Each mesh is an `.obj` or `.ply` file; its labels come from a
//! `<stem>.seams.json` sidecar when present and from OBJ UV discontinuities
//! otherwise.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use seamgnn_core::mesh::{parse_obj, parse_ply, seams_from_uvs, write_obj, LabelSidecar, UvSource};
use seamgnn_core::{Mesh, SeamLabels};

use crate::error::{Result, ToolkitError};

pub const SIDECAR_SUFFIX: &str = ".seams.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = ToolkitError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| ToolkitError::input(format!("unknown split `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub mesh: Mesh,
    pub labels: SeamLabels,
    pub split: Split,
}

impl Entry {
    pub fn name(&self) -> &str {
        self.mesh.name()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    entries: Vec<Entry>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a mesh. Names must be unique and labels aligned with the edges.
    pub fn push(&mut self, mesh: Mesh, labels: SeamLabels, split: Split) -> Result<()> {
        if labels.len() != mesh.edge_count() {
            return Err(ToolkitError::LengthMismatch {
                what: "seam labels",
                expected: mesh.edge_count(),
                actual: labels.len(),
            });
        }
        if self.entries.iter().any(|e| e.name() == mesh.name()) {
            return Err(ToolkitError::input(format!(
                "duplicate mesh name `{}`",
                mesh.name()
            )));
        }
        self.entries.push(Entry {
            mesh,
            labels,
            split,
        });
        Ok(())
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Same meshes with new split tags.
    pub fn resplit(&self, splits: &[Split]) -> Result<Self> {
        if splits.len() != self.len() {
            return Err(ToolkitError::LengthMismatch {
                what: "split tags",
                expected: self.len(),
                actual: splits.len(),
            });
        }
        Ok(Self {
            entries: self
                .entries
                .iter()
                .zip(splits)
                .map(|(e, &split)| Entry { split, ..e.clone() })
                .collect(),
        })
    }

    /// Reads every split subdirectory that exists under `dir`.
    pub fn load(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(ToolkitError::input(format!(
                "{} is not a directory",
                dir.display()
            )));
        }
        let mut ds = Self::new();
        for split in Split::ALL {
            let sub = dir.join(split.name());
            if !sub.is_dir() {
                continue;
            }
            let mut paths: Vec<PathBuf> = fs::read_dir(&sub)
                .map_err(|e| ToolkitError::io(&sub, e))?
                .filter_map(|r| r.ok().map(|d| d.path()))
                .filter(|p| matches!(p.extension().and_then(|x| x.to_str()), Some("obj" | "ply")))
                .collect();
            paths.sort();
            for p in paths {
                let (mesh, labels) = read_labeled(&p)?;
                ds.push(mesh, labels, split)?;
            }
        }
        if ds.is_empty() {
            return Err(ToolkitError::input(format!(
                "no meshes found under {}",
                dir.display()
            )));
        }
        Ok(ds)
    }

    /// Writes `<dir>/<split>/<name>.obj` plus label sidecars.
    pub fn save(&self, dir: &Path) -> Result<()> {
        for e in &self.entries {
            let sub = dir.join(e.split.name());
            fs::create_dir_all(&sub).map_err(|err| ToolkitError::io(&sub, err))?;
            write_labeled(&sub, &e.mesh, &e.labels)?;
        }
        Ok(())
    }
}

/// Reads one mesh, naming it after the file stem.
pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let bytes = fs::read(path).map_err(|e| ToolkitError::io(path, e))?;
    let mesh = match path.extension().and_then(|x| x.to_str()) {
        Some("obj") => parse_obj(&bytes)?,
        Some("ply") => parse_ply(&bytes)?,
        _ => {
            return Err(ToolkitError::input(format!(
                "{}: expected .obj or .ply",
                path.display()
            )))
        }
    };
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh");
    Ok(mesh.renamed(stem))
}

pub fn sidecar_path(mesh_path: &Path) -> PathBuf {
    let stem = mesh_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("mesh");
    mesh_path.with_file_name(format!("{stem}{SIDECAR_SUFFIX}"))
}

pub fn read_labels(path: &Path, mesh: &Mesh) -> Result<SeamLabels> {
    let text = fs::read_to_string(path).map_err(|e| ToolkitError::io(path, e))?;
    Ok(LabelSidecar::from_json(&text)?.to_labels(mesh)?)
}

/// Mesh plus labels from its sidecar, or from UV seams if it has none.
pub fn read_labeled(path: &Path) -> Result<(Mesh, SeamLabels)> {
    let mesh = read_mesh(path)?;
    let side = sidecar_path(path);
    let labels = if side.exists() {
        read_labels(&side, &mesh)?
    } else if mesh.uv_source() == Some(UvSource::PerCorner) {
        seams_from_uvs(&mesh)?
    } else {
        return Err(ToolkitError::input(format!(
            "{}: no {SIDECAR_SUFFIX} sidecar and no per-corner UVs",
            path.display()
        )));
    };
    Ok((mesh, labels))
}

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| ToolkitError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| ToolkitError::io(path, e))
}

pub fn write_labels(path: &Path, mesh: &Mesh, labels: &SeamLabels) -> Result<()> {
    write_file(path, LabelSidecar::new(mesh, labels)?.to_json())
}

/// Writes `<dir>/<name>.obj` and its sidecar; returns the OBJ path.
pub fn write_labeled(dir: &Path, mesh: &Mesh, labels: &SeamLabels) -> Result<PathBuf> {
    let obj = dir.join(format!("{}.obj", mesh.name()));
    write_file(&obj, write_obj(mesh, mesh.corner_uvs()))?;
    write_labels(&sidecar_path(&obj), mesh, labels)?;
    Ok(obj)
}

/// Assigns `val` and `test` meshes by a seeded shuffle; the rest train.
pub fn random_split(count: usize, val: usize, test: usize, seed: u64) -> Result<Vec<Split>> {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    if val + test >= count {
        return Err(ToolkitError::input(format!(
            "{val} validation + {test} test meshes leave no training data out of {count}"
        )));
    }
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Split::Train; count];
    for &i in &order[..val] {
        out[i] = Split::Val;
    }
    for &i in &order[val..val + test] {
        out[i] = Split::Test;
    }
    Ok(out)
}
