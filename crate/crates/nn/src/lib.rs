//! Graph neural network edge classifier over mesh dual graphs: reverse-mode
//! autodiff, GCN/GAT/GraphSAGE/GIN layers with residual blocks, weighted
//! cross-entropy, Adam and full-graph training.

pub mod error;
pub mod graph;
pub mod layers;
pub mod model;
pub mod optim;
pub mod tape;
pub mod train;

pub use error::{NnError, Result};
pub use graph::GraphInput;
pub use layers::{gat_layer, gcn_layer, gin_layer, sage_layer, Aggregator, SageParams};
pub use model::{binarize, weighted_ce_loss, Arch, GnnModel, ModelConfig, SeamProbabilities};
pub use train::{train, Sample, TrainConfig};
