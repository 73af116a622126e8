use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("reference not found in snapshot {snapshot}")]
    ReferenceNotFound { snapshot: usize },

    #[error("snapshot {snapshot}: aligning the reference needs a shift of {shift} bins, more than half of {n_bins}")]
    ExcessiveShift {
        snapshot: usize,
        shift: isize,
        n_bins: usize,
    },

    #[error("reference energy is zero in snapshot {snapshot}")]
    ZeroReferenceEnergy { snapshot: usize },

    #[error("timestamps are not strictly increasing at snapshot {index}")]
    NonMonotonicTimestamps { index: usize },

    #[error("recording too short: {snapshots} snapshots, at least {required} required")]
    TooShort { snapshots: usize, required: usize },

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("degenerate window: no signal energy")]
    DegenerateWindow,

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Whether the error stems from numerics rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateWindow | Error::NoConvergence { .. } | Error::NotHermitian { .. }
        )
    }
}
