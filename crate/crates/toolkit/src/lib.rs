//! Dataset tooling, evaluation metrics and the end-to-end seam pipeline.

pub mod augment;
pub mod dataset;
pub mod decimate;
pub mod error;
pub mod metrics;
pub mod pipeline;
pub mod robustness;
pub mod synth;

pub use error::{Result, ToolkitError};
