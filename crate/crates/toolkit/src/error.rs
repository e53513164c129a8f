use thiserror::Error;

pub type Result<T> = std::result::Result<T, ToolkitError>;

#[derive(Debug, Error)]
pub enum ToolkitError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("length mismatch: expected {expected}, got {actual} ({what})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("decimation stopped at {achieved} faces; target {target} is unreachable under the constraints")]
    TargetUnreachable { target: usize, achieved: usize },

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<ToolkitError>,
    },

    #[error(transparent)]
    Core(#[from] seamgnn_core::Error),

    #[error(transparent)]
    Nn(#[from] seamgnn_nn::NnError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl ToolkitError {
    pub fn input(msg: impl Into<String>) -> Self {
        Self::Input(msg.into())
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Wraps an error with the pipeline stage that produced it.
    pub fn at(self, stage: &'static str) -> Self {
        Self::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Self::Stage { source, .. } => source.is_numerical(),
            Self::Core(e) => matches!(e, seamgnn_core::Error::SolverFailed(_)),
            Self::Nn(e) => matches!(e, seamgnn_nn::NnError::Diverged { .. }),
            _ => false,
        }
    }
}
