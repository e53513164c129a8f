use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use seamgnn_core::mesh::write_obj;
use seamgnn_core::skeleton::SkeletonConfig;
use seamgnn_core::steiner::RefineConfig;
use seamgnn_core::unwrap::{distortion_ply, unwrap};
use seamgnn_core::SeamLabels;
use seamgnn_nn::{binarize, Aggregator, Arch, GnnModel, ModelConfig, TrainConfig};
use seamgnn_toolkit::augment::augment;
use seamgnn_toolkit::dataset::{
    read_labeled, read_labels, read_mesh, write_file, write_labeled, write_labels, Dataset, Split,
};
use seamgnn_toolkit::decimate::decimate;
use seamgnn_toolkit::metrics::confusion;
use seamgnn_toolkit::pipeline::{
    postprocess, predict_mesh, run_on_dataset, train_on, ModelSource, PipelineConfig, PostConfig,
    ProbSidecar, Stage, TrainingSummary,
};
use seamgnn_toolkit::robustness::{random_splits, RobustnessConfig};
use seamgnn_toolkit::synth::{
    gen_synthetic, synthetic_set, SynthKind, SynthParams, SynthSetConfig,
};
use seamgnn_toolkit::{Result, ToolkitError};

#[derive(Debug, Parser)]
#[command(
    name = "seamgnn",
    version,
    about = "Learned UV seam placement on triangle meshes"
)]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Shared {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value = "gcn", value_parser = parse::<Arch>)]
    arch: Arch,
    /// SAGE neighbourhood aggregator.
    #[arg(long, global = true, default_value = "mean", value_parser = parse::<Aggregator>)]
    aggregator: Aggregator,
    /// Binarization threshold for raw predictions.
    #[arg(long, global = true, default_value_t = 0.5)]
    threshold: f64,
    /// Probability above which predicted edges seed the Steiner refinement.
    #[arg(long, global = true, default_value_t = 0.9)]
    cut_threshold: f64,
    #[arg(long, global = true, default_value_t = 0.2)]
    candidate_fraction: f64,
    #[arg(long, global = true, default_value_t = 3)]
    orphan_distance: usize,
    #[arg(long, global = true, default_value_t = 2)]
    min_shell_faces: usize,
    /// Model checkpoint to read (predict, pipeline) or write (train).
    #[arg(long, global = true)]
    checkpoint: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 50)]
    patience: usize,
    #[arg(long, default_value_t = 5e-4)]
    lr: f64,
    /// Use the augmented dual graph (two nodes per edge).
    #[arg(long)]
    augmented: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model on the train/val splits of a dataset directory.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Predict per-edge seam probabilities for one mesh.
    Predict {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        augmented: bool,
    },
    /// Refine seams with distortion-weighted Steiner trees.
    RefineDst {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        probs: PathBuf,
    },
    /// Thin predicted seams to one-edge-wide curves.
    Skeletonize {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        probs: PathBuf,
    },
    /// Cut along seams, flatten every shell and report distortion.
    Unwrap {
        #[arg(long)]
        mesh: PathBuf,
        /// Seam sidecar; defaults to the mesh's own labels.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Compare predicted labels against ground truth.
    Eval {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth sidecar; defaults to the mesh's own labels.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Write noisy copies of a labeled mesh.
    Augment {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value_t = 4)]
        count: usize,
        #[arg(long, default_value_t = 0.005)]
        noise_std: f64,
        #[arg(long, default_value_t = 0.5)]
        vertex_fraction: f64,
    },
    /// Reduce a labeled mesh to a target face count keeping its seams.
    Decimate {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        target_faces: usize,
    },
    /// Generate synthetic labeled meshes or a split dataset.
    GenSynth {
        /// Single shape kind; omit to write a train/val/test dataset.
        #[arg(long, value_parser = parse::<SynthKind>)]
        kind: Option<SynthKind>,
        #[arg(long, default_value_t = 12)]
        segments: usize,
        #[arg(long, default_value_t = 6)]
        rings: usize,
        #[arg(long, default_value_t = 20)]
        train: usize,
        #[arg(long, default_value_t = 3)]
        val: usize,
        #[arg(long, default_value_t = 5)]
        test: usize,
    },
    /// Train or load, predict, post-process, unwrap and score a dataset.
    Pipeline {
        #[arg(long)]
        data: PathBuf,
        /// Post-processing stages in order, e.g. `sk,dst`; `none` for raw
        /// thresholding.
        #[arg(long, default_value = "sk,dst")]
        stages: String,
        #[arg(long, default_value = "test", value_parser = parse::<Split>)]
        eval_split: Split,
        /// Instead of one run, repeat over this many random val/test splits.
        #[arg(long)]
        splits: Option<usize>,
        #[arg(long, default_value_t = 3)]
        split_val: usize,
        #[arg(long, default_value_t = 5)]
        split_test: usize,
        #[command(flatten)]
        train: TrainArgs,
    },
}

fn parse<T: std::str::FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| e.to_string())
}

impl Shared {
    fn model_config(&self) -> ModelConfig {
        ModelConfig {
            aggregator: self.aggregator,
            ..ModelConfig::new(self.arch)
        }
    }

    fn train_config(&self, args: &TrainArgs) -> TrainConfig {
        TrainConfig {
            learning_rate: args.lr,
            patience: args.patience,
            max_epochs: args.epochs,
            seed: self.seed,
            binarize_threshold: self.threshold,
            ..TrainConfig::default()
        }
    }

    fn post_config(&self, stages: Vec<Stage>) -> PostConfig {
        PostConfig {
            threshold: self.threshold,
            skeleton: SkeletonConfig {
                candidate_fraction: self.candidate_fraction,
                max_orphan_distance: self.orphan_distance,
                min_shell_faces: self.min_shell_faces,
            },
            refine: RefineConfig {
                cut_threshold: self.cut_threshold,
                min_shell_faces: self.min_shell_faces,
                ..RefineConfig::default()
            },
            stages,
        }
    }

    fn load_model(&self) -> Result<GnnModel> {
        let path = self
            .checkpoint
            .as_ref()
            .ok_or_else(|| ToolkitError::input("--checkpoint is required"))?;
        Ok(GnnModel::load(path)?)
    }
}

fn parse_stages(s: &str) -> Result<Vec<Stage>> {
    if s == "none" {
        return Ok(Vec::new());
    }
    s.split(',').map(|t| t.trim().parse()).collect()
}

fn out_path(shared: &Shared, file: &str) -> PathBuf {
    shared.out_dir.join(file)
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn labels_or_own(
    mesh_path: &Path,
    sidecar: Option<&PathBuf>,
) -> Result<(seamgnn_core::Mesh, SeamLabels)> {
    match sidecar {
        Some(p) => {
            let mesh = read_mesh(mesh_path)?;
            let labels = read_labels(p, &mesh)?;
            Ok((mesh, labels))
        }
        None => read_labeled(mesh_path),
    }
}

fn run(cli: Cli) -> Result<()> {
    let s = &cli.shared;
    match &cli.command {
        Command::Train { data, train } => {
            let ds = Dataset::load(data)?;
            let (model, history) = train_on(
                &ds,
                &s.model_config(),
                &s.train_config(train),
                train.augmented,
            )?;
            let ckpt = s
                .checkpoint
                .clone()
                .unwrap_or_else(|| out_path(s, "model.json"));
            write_file(&ckpt, model.to_json()?)?;
            write_file(
                &out_path(s, "history.json"),
                serde_json::to_string_pretty(&history)?,
            )?;
            print_json(&TrainingSummary::from(&history))?;
        }
        Command::Predict { mesh, augmented } => {
            let model = s.load_model()?;
            let m = read_mesh(mesh)?;
            let probs = predict_mesh(&model, &m, *augmented)?;
            ProbSidecar::write(
                &out_path(s, &format!("{}.probs.json", m.name())),
                &m,
                &probs,
            )?;
            write_labels(
                &out_path(s, &format!("{}.seams.json", m.name())),
                &m,
                &binarize(&probs, s.threshold),
            )?;
        }
        Command::RefineDst { mesh, probs } | Command::Skeletonize { mesh, probs } => {
            let stage = if matches!(cli.command, Command::RefineDst { .. }) {
                Stage::Dst
            } else {
                Stage::Skeletonize
            };
            let m = read_mesh(mesh)?;
            let p = ProbSidecar::read(probs, &m)?;
            let out = postprocess(&m, &p, &s.post_config(vec![stage]))?;
            write_labels(
                &out_path(s, &format!("{}.seams.json", m.name())),
                &m,
                &out.labels,
            )?;
            if let Some(trees) = &out.trees {
                write_file(
                    &out_path(s, &format!("{}.dst.json", m.name())),
                    serde_json::to_string_pretty(trees)?,
                )?;
            }
            println!("{} seam edges", out.labels.count());
        }
        Command::Unwrap { mesh, labels } => {
            let (m, l) = labels_or_own(mesh, labels.as_ref())?;
            let atlas = unwrap(&m, &l)?;
            let uvs = atlas.corner_uvs(m.face_count());
            write_file(
                &out_path(s, &format!("{}.obj", m.name())),
                write_obj(&m, Some(&uvs)),
            )?;
            write_file(
                &out_path(s, &format!("{}.distortion.ply", m.name())),
                distortion_ply(&m, &atlas.face_distortion),
            )?;
            print_json(&serde_json::json!({
                "shell_count": atlas.shell_count(),
                "avg_distortion": atlas.avg_distortion(),
                "added_seams": atlas.added_seams.len(),
            }))?;
        }
        Command::Eval { mesh, pred, truth } => {
            let (m, t) = labels_or_own(mesh, truth.as_ref())?;
            let p = read_labels(pred, &m)?;
            let c = confusion(&p, &t)?;
            print_json(&serde_json::json!({ "confusion": c, "rates": c.rates() }))?;
        }
        Command::Augment {
            mesh,
            count,
            noise_std,
            vertex_fraction,
        } => {
            let (m, l) = read_labeled(mesh)?;
            for (am, al) in augment(&m, &l, *count, *noise_std, *vertex_fraction, s.seed)? {
                write_labeled(&s.out_dir, &am, &al)?;
            }
        }
        Command::Decimate { mesh, target_faces } => {
            let (m, l) = read_labeled(mesh)?;
            let (dm, dl) = decimate(&m, &l, *target_faces)?;
            write_labeled(&s.out_dir, &dm, &dl)?;
            println!("{} faces", dm.face_count());
        }
        Command::GenSynth {
            kind,
            segments,
            rings,
            train,
            val,
            test,
        } => match kind {
            Some(k) => {
                let params = SynthParams {
                    segments: *segments,
                    rings: *rings,
                    ..SynthParams::default()
                };
                let (m, l) = gen_synthetic(*k, &params, s.seed)?;
                write_labeled(&s.out_dir, &m, &l)?;
            }
            None => {
                let cfg = SynthSetConfig {
                    train: *train,
                    val: *val,
                    test: *test,
                    segments: *segments,
                    rings: *rings,
                    seed: s.seed,
                    ..SynthSetConfig::default()
                };
                synthetic_set(&cfg)?.save(&s.out_dir)?;
            }
        },
        Command::Pipeline {
            data,
            stages,
            eval_split,
            splits,
            split_val,
            split_test,
            train,
        } => {
            let ds = Dataset::load(data).map_err(|e| e.at("load-data"))?;
            let post = s.post_config(parse_stages(stages)?);
            if let Some(n) = splits {
                let cfg = RobustnessConfig {
                    seeds: (0..*n as u64).map(|i| s.seed + i).collect(),
                    val: *split_val,
                    test: *split_test,
                    model: s.model_config(),
                    train: s.train_config(train),
                    augmented_dual: train.augmented,
                    post,
                };
                let report = random_splits(&ds, &cfg)?;
                write_file(&out_path(s, "splits.json"), report.to_json())?;
                print_json(&report.mean)?;
            } else {
                let model = match &s.checkpoint {
                    Some(p) => ModelSource::Checkpoint(p.clone()),
                    None => ModelSource::Train {
                        model: s.model_config(),
                        train: s.train_config(train),
                    },
                };
                let cfg = PipelineConfig {
                    data_dir: data.clone(),
                    out_dir: Some(s.out_dir.clone()),
                    model,
                    augmented_dual: train.augmented,
                    eval_split: *eval_split,
                    post,
                };
                let out = run_on_dataset(&cfg, &ds)?;
                print_json(&out.report.summary)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
