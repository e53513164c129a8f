use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },

    #[error("face {face} repeats vertex {vertex}")]
    RepeatedVertex { face: usize, vertex: usize },

    #[error("face {face} has {corners} corners; only triangles are supported")]
    NonTriangular { face: usize, corners: usize },

    #[error("edge ({0}, {1}) is shared by {2} faces")]
    NonManifoldEdge(usize, usize, usize),

    #[error("mesh has no faces")]
    NoFaces,

    #[error("mesh has no UV coordinates")]
    MissingUvs,

    #[error("vertex {0} has no incident faces")]
    IsolatedVertex(usize),

    #[error("face {0} is degenerate (zero area)")]
    DegenerateFace(usize),

    #[error("mesh has zero spatial extent")]
    ZeroExtent,

    #[error("length mismatch: expected {expected}, got {actual} ({what})")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("shell has no boundary; it must be cut before embedding")]
    ClosedShell,

    #[error("vertex {0} has more than one outgoing boundary edge")]
    NonManifoldBoundary(usize),

    #[error("linear solve did not converge (residual {0:e})")]
    SolverFailed(f64),

    #[error("terminal {0} is not reachable from the other terminals")]
    DisconnectedTerminals(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
