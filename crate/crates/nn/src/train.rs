//! Full-graph training with early stopping on validation loss.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seamgnn_core::SeamLabels;
use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::graph::GraphInput;
use crate::layers::check;
use crate::model::GnnModel;
use crate::optim::Adam;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub seam_weight: f64,
    pub nonseam_weight: f64,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub binarize_threshold: f64,
    /// Stop as soon as eval-mode edge accuracy on the training set reaches
    /// this fraction.
    pub target_train_accuracy: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-4,
            seam_weight: 100.0,
            nonseam_weight: 1.0,
            patience: 50,
            max_epochs: 500,
            seed: 0,
            binarize_threshold: 0.5,
            target_train_accuracy: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.learning_rate, self.seam_weight, self.nonseam_weight];
        if positive.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(NnError::InvalidConfig(
                "learning rate and class weights must be positive".into(),
            ));
        }
        if self.patience == 0 || self.max_epochs == 0 {
            return Err(NnError::InvalidConfig(
                "patience and max_epochs must be at least 1".into(),
            ));
        }
        if !(self.binarize_threshold > 0.0 && self.binarize_threshold < 1.0) {
            return Err(NnError::InvalidConfig(
                "binarize threshold must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }

    fn weights(&self, labels: &[usize]) -> Vec<f64> {
        labels
            .iter()
            .map(|&l| {
                if l == 1 {
                    self.seam_weight
                } else {
                    self.nonseam_weight
                }
            })
            .collect()
    }
}

/// One mesh with its ground-truth labels.
#[derive(Debug, Clone)]
pub struct Sample {
    pub name: String,
    pub graph: GraphInput,
    pub edge_labels: SeamLabels,
    /// Labels per dual node.
    pub node_labels: Vec<usize>,
}

impl Sample {
    pub fn new(
        name: impl Into<String>,
        graph: GraphInput,
        edge_labels: SeamLabels,
    ) -> Result<Self> {
        check("edge labels", graph.edge_count, edge_labels.len())?;
        let node_labels = graph.node_labels(edge_labels.as_slice());
        Ok(Self {
            name: name.into(),
            graph,
            edge_labels,
            node_labels,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Present only when a target accuracy is configured.
    pub train_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Patience,
    MaxEpochs,
    TargetAccuracy,
}

/// Fraction of edges whose thresholded prediction matches the label.
pub fn edge_accuracy(model: &GnnModel, sample: &Sample, threshold: f64) -> Result<f64> {
    let pred = model.predict(&sample.graph)?.binarize(threshold);
    let n = sample.edge_labels.len();
    if n == 0 {
        return Ok(1.0);
    }
    let hits = pred
        .as_slice()
        .iter()
        .zip(sample.edge_labels.as_slice())
        .filter(|(a, b)| a == b)
        .count();
    Ok(hits as f64 / n as f64)
}

/// Edge accuracy pooled over all samples.
pub fn dataset_accuracy(model: &GnnModel, samples: &[Sample], threshold: f64) -> Result<f64> {
    let (mut hits, mut total) = (0.0, 0usize);
    for s in samples {
        let n = s.edge_labels.len();
        hits += edge_accuracy(model, s, threshold)? * n as f64;
        total += n;
    }
    Ok(if total == 0 { 1.0 } else { hits / total as f64 })
}

/// Mean inference loss over samples.
pub fn mean_loss(model: &GnnModel, samples: &[Sample], cfg: &TrainConfig) -> Result<f64> {
    let mut total = 0.0;
    for s in samples {
        total += model.loss(&s.graph, &s.node_labels, &cfg.weights(&s.node_labels))?;
    }
    Ok(total / samples.len() as f64)
}

/// Trains a copy of `model`: one Adam step per mesh per epoch, in a
/// seed-shuffled order. Returns the parameters with the lowest validation
/// loss.
pub fn train(
    model: &GnnModel,
    train_set: &[Sample],
    val_set: &[Sample],
    cfg: &TrainConfig,
) -> Result<(GnnModel, History)> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(NnError::EmptyDataset("training set"));
    }
    if val_set.is_empty() {
        return Err(NnError::EmptyDataset("validation set"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(cfg.learning_rate);
    let mut current = model.clone();
    let mut best = model.clone();
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0;
    let mut epochs = Vec::new();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let weights: Vec<Vec<f64>> = train_set
        .iter()
        .map(|s| cfg.weights(&s.node_labels))
        .collect();
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut train_loss = 0.0;
        for &i in &order {
            let s = &train_set[i];
            let (loss, grads) = current.loss_and_gradients(
                &s.graph,
                &s.node_labels,
                &weights[i],
                Some(&mut rng),
            )?;
            if !loss.is_finite() {
                return Err(NnError::Diverged { epoch, loss });
            }
            train_loss += loss;
            adam.step(&mut current.params, &grads);
        }
        train_loss /= train_set.len() as f64;
        let val_loss = mean_loss(&current, val_set, cfg)?;
        if !val_loss.is_finite() || !current.all_finite() {
            return Err(NnError::Diverged {
                epoch,
                loss: val_loss,
            });
        }
        let train_accuracy = match cfg.target_train_accuracy {
            Some(_) => Some(dataset_accuracy(
                &current,
                train_set,
                cfg.binarize_threshold,
            )?),
            None => None,
        };
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            train_accuracy,
        });
        if val_loss < best_loss {
            best_loss = val_loss;
            best_epoch = epoch;
            best = current.clone();
        }
        if let (Some(target), Some(acc)) = (cfg.target_train_accuracy, train_accuracy) {
            if acc >= target {
                best = current.clone();
                best_epoch = epoch;
                best_loss = val_loss;
                stop_reason = StopReason::TargetAccuracy;
                break;
            }
        }
        if epoch - best_epoch >= cfg.patience {
            stop_reason = StopReason::Patience;
            break;
        }
    }
    Ok((
        best,
        History {
            epochs,
            best_epoch,
            best_val_loss: best_loss,
            stop_reason,
        },
    ))
}
