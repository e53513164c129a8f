//! End-to-end run: train or load a model, predict seam probabilities,
//! post-process them into seams, unwrap and score against ground truth.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use seamgnn_core::dual::mesh_to_dual;
use seamgnn_core::skeleton::{purge_tiny_shells, thin, SkeletonConfig};
use seamgnn_core::steiner::{refine_labels_with, RefineConfig, ShellTree};
use seamgnn_core::unwrap::{distortion_ply, unwrap, UvAtlas};
use seamgnn_core::{mesh::write_obj, Mesh, SeamLabels};
use seamgnn_nn::train::{History, StopReason};
use seamgnn_nn::{
    binarize, train, Aggregator, Arch, GnnModel, GraphInput, ModelConfig, Sample, TrainConfig,
};

use crate::dataset::{write_file, write_labels, Dataset, Entry, Split};
use crate::error::{Result, ToolkitError};
use crate::metrics::{confusion, Confusion};

pub const REPORT_FORMAT: &str = "seamgnn-report";
pub const REPORT_VERSION: u32 = 1;

/// Post-processing step applied to predicted probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    /// Thinning to one-edge-wide curves followed by the tiny-shell purge.
    Skeletonize,
    /// Distortion-weighted Steiner refinement.
    Dst,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Skeletonize => "skeletonize",
            Stage::Dst => "dst",
        })
    }
}

impl FromStr for Stage {
    type Err = ToolkitError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sk" | "skeletonize" => Ok(Stage::Skeletonize),
            "dst" | "refine-dst" => Ok(Stage::Dst),
            _ => Err(ToolkitError::input(format!(
                "unknown stage `{s}` (expected sk or dst)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PostConfig {
    /// Binarization threshold when no stage produces labels.
    pub threshold: f64,
    pub skeleton: SkeletonConfig,
    pub refine: RefineConfig,
    /// Stages in execution order.
    pub stages: Vec<Stage>,
}

impl Default for PostConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            skeleton: SkeletonConfig::default(),
            refine: RefineConfig::default(),
            stages: vec![Stage::Skeletonize, Stage::Dst],
        }
    }
}

impl PostConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if !unit(self.threshold) || !unit(self.refine.cut_threshold) {
            return Err(ToolkitError::input("thresholds must lie in (0, 1)"));
        }
        self.skeleton.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PostOutcome {
    pub labels: SeamLabels,
    /// Steiner trees of the last DST stage, if one ran.
    pub trees: Option<Vec<ShellTree>>,
}

/// Runs the configured stages on per-edge probabilities.
///
/// Thinning consumes a probability field and DST binarizes one at its cut
/// threshold. After a stage has produced labels, DST receives them as exact
/// 0/1 probabilities and thinning receives the original probabilities
/// shifted so that labeled edges rank above all others.
pub fn postprocess(mesh: &Mesh, probs: &[f64], cfg: &PostConfig) -> Result<PostOutcome> {
    cfg.validate()?;
    if probs.len() != mesh.edge_count() {
        return Err(ToolkitError::LengthMismatch {
            what: "edge probabilities",
            expected: mesh.edge_count(),
            actual: probs.len(),
        });
    }
    let mut labels: Option<SeamLabels> = None;
    let mut trees = None;
    for &stage in &cfg.stages {
        match stage {
            Stage::Skeletonize => {
                let field: Vec<f64> = match &labels {
                    None => probs.to_vec(),
                    Some(l) => probs
                        .iter()
                        .zip(l.as_slice())
                        .map(|(&p, &s)| if s { 0.5 + 0.5 * p } else { 0.5 * p })
                        .collect(),
                };
                let thinned = thin(mesh, &field, &cfg.skeleton)
                    .map_err(|e| ToolkitError::from(e).at("skeletonize"))?;
                labels = Some(purge_tiny_shells(
                    mesh,
                    &thinned,
                    cfg.skeleton.min_shell_faces,
                ));
            }
            Stage::Dst => {
                let (field, start) = match &labels {
                    None => (probs.to_vec(), binarize(probs, cfg.refine.cut_threshold)),
                    Some(l) => (
                        l.as_slice()
                            .iter()
                            .map(|&s| if s { 1.0 } else { 0.0 })
                            .collect(),
                        l.clone(),
                    ),
                };
                let refined = unwrap(mesh, &start)
                    .and_then(|atlas| {
                        refine_labels_with(mesh, &field, &atlas.face_distortion, &cfg.refine)
                    })
                    .map_err(|e| ToolkitError::from(e).at("refine-dst"))?;
                trees = Some(refined.shells);
                labels = Some(refined.labels);
            }
        }
    }
    Ok(PostOutcome {
        labels: labels.unwrap_or_else(|| binarize(probs, cfg.threshold)),
        trees,
    })
}

/// Dual graph input for a mesh.
pub fn graph_input(mesh: &Mesh, augmented: bool) -> Result<GraphInput> {
    Ok(GraphInput::from_dual(&mesh_to_dual(mesh, augmented)?))
}

pub fn predict_mesh(model: &GnnModel, mesh: &Mesh, augmented: bool) -> Result<Vec<f64>> {
    Ok(model.predict(&graph_input(mesh, augmented)?)?.0)
}

pub fn samples<'a>(
    entries: impl Iterator<Item = &'a Entry>,
    augmented: bool,
) -> Result<Vec<Sample>> {
    entries
        .map(|e| {
            Ok(Sample::new(
                e.name(),
                graph_input(&e.mesh, augmented)?,
                e.labels.clone(),
            )?)
        })
        .collect()
}

/// Trains on the dataset's train split, validating on its val split (or the
/// train split when there is none).
pub fn train_on(
    ds: &Dataset,
    model: &ModelConfig,
    cfg: &TrainConfig,
    augmented: bool,
) -> Result<(GnnModel, History)> {
    let train_set = samples(ds.split(Split::Train), augmented)?;
    let val_set = samples(ds.split(Split::Val), augmented)?;
    let init = GnnModel::new(model.clone(), cfg.seed)?;
    let val = if val_set.is_empty() {
        &train_set
    } else {
        &val_set
    };
    Ok(train(&init, &train_set, val, cfg)?)
}

#[derive(Debug, Clone)]
pub enum ModelSource {
    Checkpoint(PathBuf),
    Train {
        model: ModelConfig,
        train: TrainConfig,
    },
    /// Already trained model, e.g. shared across runs.
    Given(GnnModel),
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub data_dir: PathBuf,
    pub out_dir: Option<PathBuf>,
    pub model: ModelSource,
    pub augmented_dual: bool,
    pub eval_split: Split,
    pub post: PostConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub arch: Arch,
    pub aggregator: Aggregator,
    pub model_seed: Option<u64>,
    pub augmented_dual: bool,
    pub eval_split: Split,
    pub threshold: f64,
    pub cut_threshold: f64,
    pub candidate_fraction: f64,
    pub orphan_distance: usize,
    pub min_shell_faces: usize,
    pub stages: Vec<Stage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub epochs: usize,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stop_reason: StopReason,
}

impl From<&History> for TrainingSummary {
    fn from(h: &History) -> Self {
        Self {
            epochs: h.epochs.len(),
            best_epoch: h.best_epoch,
            best_val_loss: h.best_val_loss,
            stop_reason: h.stop_reason,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshReport {
    pub name: String,
    pub faces: usize,
    pub edges: usize,
    pub true_seams: usize,
    pub predicted_seams: usize,
    pub confusion: Confusion,
    pub fpr: Option<f64>,
    pub tpr: Option<f64>,
    pub accuracy: f64,
    pub shell_count: usize,
    pub avg_distortion: f64,
    /// Edges cut only to open closed shells for unwrapping.
    pub added_seams: usize,
}

/// Rates from the pooled confusion counts; shell count and distortion are
/// means over meshes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub meshes: usize,
    pub fpr: Option<f64>,
    pub tpr: Option<f64>,
    pub accuracy: f64,
    pub shell_count: f64,
    pub avg_distortion: f64,
}

impl Summary {
    pub fn from_meshes(meshes: &[MeshReport]) -> Self {
        let pooled = meshes
            .iter()
            .fold(Confusion::default(), |acc, m| acc.merge(&m.confusion));
        let rates = pooled.rates();
        let n = meshes.len().max(1) as f64;
        Self {
            meshes: meshes.len(),
            fpr: rates.fpr,
            tpr: rates.tpr,
            accuracy: rates.accuracy,
            shell_count: meshes.iter().map(|m| m.shell_count as f64).sum::<f64>() / n,
            avg_distortion: meshes.iter().map(|m| m.avg_distortion).sum::<f64>() / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format: String,
    pub version: u32,
    pub settings: Settings,
    pub training: Option<TrainingSummary>,
    pub summary: Summary,
    pub meshes: Vec<MeshReport>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if r.format != REPORT_FORMAT || r.version != REPORT_VERSION {
            return Err(ToolkitError::input(format!(
                "unsupported report {} v{}",
                r.format, r.version
            )));
        }
        Ok(r)
    }
}

/// Labels, atlas and metrics of one evaluated mesh.
#[derive(Debug, Clone)]
pub struct MeshResult {
    pub probs: Vec<f64>,
    pub post: PostOutcome,
    pub atlas: UvAtlas,
    pub report: MeshReport,
}

pub fn evaluate_mesh(
    model: &GnnModel,
    entry: &Entry,
    augmented: bool,
    post: &PostConfig,
) -> Result<MeshResult> {
    let mesh = &entry.mesh;
    let probs = predict_mesh(model, mesh, augmented).map_err(|e| e.at("predict"))?;
    let outcome = postprocess(mesh, &probs, post)?;
    let atlas = unwrap(mesh, &outcome.labels).map_err(|e| ToolkitError::from(e).at("unwrap"))?;
    let c = confusion(&outcome.labels, &entry.labels).map_err(|e| e.at("metrics"))?;
    let rates = c.rates();
    let report = MeshReport {
        name: entry.name().to_string(),
        faces: mesh.face_count(),
        edges: mesh.edge_count(),
        true_seams: entry.labels.count(),
        predicted_seams: outcome.labels.count(),
        confusion: c,
        fpr: rates.fpr,
        tpr: rates.tpr,
        accuracy: rates.accuracy,
        shell_count: atlas.shell_count(),
        avg_distortion: atlas.avg_distortion(),
        added_seams: atlas.added_seams.len(),
    };
    Ok(MeshResult {
        probs,
        post: outcome,
        atlas,
        report,
    })
}

/// Per-edge probabilities stored next to a mesh as `<name>.probs.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbSidecar {
    pub mesh: String,
    pub probs: Vec<f64>,
}

impl ProbSidecar {
    pub fn read(path: &Path, mesh: &Mesh) -> Result<Vec<f64>> {
        let text = std::fs::read_to_string(path).map_err(|e| ToolkitError::io(path, e))?;
        let side: Self = serde_json::from_str(&text)?;
        if side.probs.len() != mesh.edge_count() {
            return Err(ToolkitError::LengthMismatch {
                what: "probability sidecar",
                expected: mesh.edge_count(),
                actual: side.probs.len(),
            });
        }
        if side.probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(ToolkitError::input(format!(
                "{}: probabilities must lie in [0, 1]",
                path.display()
            )));
        }
        Ok(side.probs)
    }

    pub fn write(path: &Path, mesh: &Mesh, probs: &[f64]) -> Result<()> {
        let side = Self {
            mesh: mesh.name().to_string(),
            probs: probs.to_vec(),
        };
        write_file(path, serde_json::to_string(&side)?)
    }
}

/// Writes the per-mesh artifacts into `dir`: the mesh with its UV atlas,
/// predicted labels, probabilities, distortion PLY and DST trees.
pub fn write_mesh_artifacts(dir: &Path, mesh: &Mesh, result: &MeshResult) -> Result<()> {
    let name = mesh.name();
    let uvs = result.atlas.corner_uvs(mesh.face_count());
    write_file(
        &dir.join(format!("{name}.obj")),
        write_obj(mesh, Some(&uvs)),
    )?;
    write_labels(
        &dir.join(format!("{name}.seams.json")),
        mesh,
        &result.post.labels,
    )?;
    ProbSidecar::write(&dir.join(format!("{name}.probs.json")), mesh, &result.probs)?;
    write_file(
        &dir.join(format!("{name}.distortion.ply")),
        distortion_ply(mesh, &result.atlas.face_distortion),
    )?;
    if let Some(trees) = &result.post.trees {
        write_file(
            &dir.join(format!("{name}.dst.json")),
            serde_json::to_string_pretty(trees)?,
        )?;
    }
    Ok(())
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub model: GnnModel,
    pub history: Option<History>,
    pub report: EvalReport,
}

/// Loads the dataset named by `cfg` and runs [`run_on_dataset`].
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let ds = Dataset::load(&cfg.data_dir).map_err(|e| e.at("load-data"))?;
    run_on_dataset(cfg, &ds)
}

pub fn run_on_dataset(cfg: &PipelineConfig, ds: &Dataset) -> Result<PipelineOutput> {
    cfg.post.validate()?;
    let (model, history, model_seed) = match &cfg.model {
        ModelSource::Checkpoint(path) => (
            GnnModel::load(path).map_err(|e| ToolkitError::from(e).at("load-model"))?,
            None,
            None,
        ),
        ModelSource::Given(m) => (m.clone(), None, None),
        ModelSource::Train { model, train } => {
            let (m, h) =
                train_on(ds, model, train, cfg.augmented_dual).map_err(|e| e.at("train"))?;
            (m, Some(h), Some(train.seed))
        }
    };

    let eval: Vec<&Entry> = ds.split(cfg.eval_split).collect();
    if eval.is_empty() {
        return Err(ToolkitError::input(format!(
            "dataset has no `{}` meshes",
            cfg.eval_split
        )));
    }
    let mesh_dir = cfg.out_dir.as_ref().map(|d| d.join("meshes"));
    let mut meshes = Vec::with_capacity(eval.len());
    for entry in eval {
        let result = evaluate_mesh(&model, entry, cfg.augmented_dual, &cfg.post)?;
        if let Some(dir) = &mesh_dir {
            write_mesh_artifacts(dir, &entry.mesh, &result).map_err(|e| e.at("write-artifacts"))?;
        }
        meshes.push(result.report);
    }

    let post = &cfg.post;
    let report = EvalReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        settings: Settings {
            arch: model.config.arch,
            aggregator: model.config.aggregator,
            model_seed,
            augmented_dual: cfg.augmented_dual,
            eval_split: cfg.eval_split,
            threshold: post.threshold,
            cut_threshold: post.refine.cut_threshold,
            candidate_fraction: post.skeleton.candidate_fraction,
            orphan_distance: post.skeleton.max_orphan_distance,
            min_shell_faces: post.skeleton.min_shell_faces,
            stages: post.stages.clone(),
        },
        training: history.as_ref().map(TrainingSummary::from),
        summary: Summary::from_meshes(&meshes),
        meshes,
    };
    if let Some(dir) = &cfg.out_dir {
        write_file(&dir.join("report.json"), report.to_json())
            .map_err(|e| e.at("write-artifacts"))?;
        if history.is_some() {
            let path = dir.join("model.json");
            model
                .save(&path)
                .map_err(|e| ToolkitError::from(e).at("write-artifacts"))?;
        }
    }
    Ok(PipelineOutput {
        model,
        history,
        report,
    })
}
