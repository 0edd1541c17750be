use thiserror::Error;

use crate::sdp::SolveStatus;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid effect: {0}")]
    InvalidEffect(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unsupported dimensions {dims:?}: {reason}")]
    DimensionUnsupported { dims: Vec<usize>, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("support violation: weight {weight:e} of the first argument lies outside the support of the second")]
    SupportViolation { weight: f64 },

    #[error("value is infinite: {0}")]
    InfiniteValue(String),

    #[error("sdp solve did not reach optimality (status {status:?}, {iterations} iterations, gap {gap:e})")]
    Solver {
        status: SolveStatus,
        iterations: usize,
        gap: f64,
    },

    #[error("separability bracket is open: {0}")]
    RelaxationGap(String),

    #[error("channel is not non-entangling: worst-case output robustness {robustness:e} exceeds {delta:e}")]
    NotSepp { robustness: f64, delta: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Process exit codes of the command-line tool.
pub mod exit {
    /// Some theorem record failed.
    pub const RECORD_FAILED: i32 = 1;
    /// Invalid input: files, parameters, states, dimensions.
    pub const VALIDATION: i32 = 2;
    /// An SDP did not converge.
    pub const SOLVER: i32 = 3;
    /// The separability bracket is wider than requested.
    pub const RELAXATION_GAP: i32 = 4;
    /// A built channel could not be certified non-entangling.
    pub const NOT_SEPP: i32 = 5;
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Solver { .. } => exit::SOLVER,
            Error::RelaxationGap(_) => exit::RELAXATION_GAP,
            Error::NotSepp { .. } => exit::NOT_SEPP,
            _ => exit::VALIDATION,
        }
    }
}
