//! Repeated training and evaluation over random validation/test splits.

use serde::{Deserialize, Serialize};

use seamgnn_nn::{ModelConfig, TrainConfig};

use crate::dataset::{random_split, Dataset, Split};
use crate::error::{Result, ToolkitError};
use crate::pipeline::{run_on_dataset, ModelSource, PipelineConfig, PostConfig, Summary};

pub const SPLITS_FORMAT: &str = "seamgnn-splits";
pub const SPLITS_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct RobustnessConfig {
    /// One split and one training run per seed.
    pub seeds: Vec<u64>,
    pub val: usize,
    pub test: usize,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub augmented_dual: bool,
    pub post: PostConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRow {
    pub seed: u64,
    pub test_meshes: Vec<String>,
    pub best_epoch: Option<usize>,
    pub summary: Summary,
}

/// Per-metric mean over rows; rates average only the rows where defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRow {
    pub fpr: Option<f64>,
    pub tpr: Option<f64>,
    pub accuracy: f64,
    pub shell_count: f64,
    pub avg_distortion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub format: String,
    pub version: u32,
    pub rows: Vec<SplitRow>,
    pub mean: MeanRow,
}

impl RobustnessReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn mean_row(rows: &[SplitRow]) -> MeanRow {
    let col = |f: fn(&Summary) -> f64| mean(rows.iter().map(|r| f(&r.summary))).unwrap_or(0.0);
    MeanRow {
        fpr: mean(rows.iter().filter_map(|r| r.summary.fpr)),
        tpr: mean(rows.iter().filter_map(|r| r.summary.tpr)),
        accuracy: col(|s| s.accuracy),
        shell_count: col(|s| s.shell_count),
        avg_distortion: col(|s| s.avg_distortion),
    }
}

/// Re-splits `ds` once per seed, trains from scratch with that seed and
/// evaluates the test split.
pub fn random_splits(ds: &Dataset, cfg: &RobustnessConfig) -> Result<RobustnessReport> {
    if cfg.seeds.is_empty() {
        return Err(ToolkitError::input("at least one split seed is required"));
    }
    let mut rows = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        let split = ds.resplit(&random_split(ds.len(), cfg.val, cfg.test, seed)?)?;
        let pipeline = PipelineConfig {
            data_dir: Default::default(),
            out_dir: None,
            model: ModelSource::Train {
                model: cfg.model.clone(),
                train: TrainConfig {
                    seed,
                    ..cfg.train.clone()
                },
            },
            augmented_dual: cfg.augmented_dual,
            eval_split: Split::Test,
            post: cfg.post.clone(),
        };
        let out = run_on_dataset(&pipeline, &split)?;
        rows.push(SplitRow {
            seed,
            test_meshes: split
                .split(Split::Test)
                .map(|e| e.name().to_string())
                .collect(),
            best_epoch: out.history.as_ref().map(|h| h.best_epoch),
            summary: out.report.summary,
        });
    }
    Ok(RobustnessReport {
        format: SPLITS_FORMAT.into(),
        version: SPLITS_VERSION,
        mean: mean_row(&rows),
        rows,
    })
}
