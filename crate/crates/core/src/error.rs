use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {requested} outside supported range 1..={max}")]
    Capacity { requested: usize, max: usize },

    #[error("qubit index {index} out of range for {num_qubits}-qubit register")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("angle must be finite, got {0}")]
    NonFiniteAngle(f64),

    #[error("invalid circuit topology: {0}")]
    InvalidTopology(String),

    #[error("shot count must be at least 1")]
    ZeroShots,

    #[error("{what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("label must be 0 or 1, got {0}")]
    InvalidLabel(u8),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tensor-train rank mismatch: {0}")]
    RankMismatch(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported format version {found} (this build reads version {supported}); re-export the file with a matching tool version")]
    Version { found: u16, supported: u16 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(what: &'static str, expected: usize, found: usize) -> Self {
        Error::ShapeMismatch { what, expected, found }
    }

    /// True for errors caused by malformed or incompatible files.
    pub fn is_format(&self) -> bool {
        matches!(self, Error::Format(_) | Error::Version { .. } | Error::Json(_))
    }

    /// True for aborts caused by NaN/inf during numerical work.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
