use std::path::PathBuf;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("eigendecomposition did not converge after {sweeps} sweeps (off-diagonal norm {residual:.3e})")]
    Convergence { sweeps: usize, residual: f64 },

    #[error("degenerate statistics: {0}")]
    DegenerateStatistics(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("noise variance must be positive for guidance (got {0})")]
    DegenerateNoise(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("reverse diffusion diverged at step t={step}")]
    Divergence { step: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("checksum mismatch: {0}")]
    Checksum(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::InvalidDimension(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
