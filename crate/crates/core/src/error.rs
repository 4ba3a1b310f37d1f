use thiserror::Error;

/// Errors raised by the physical model and the solvers built on it.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("link gain is singular: transmitter and receiver coincide")]
    SingularGain,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("cache overflow at UAV {uav}: {demanded} distinct services demanded, capacity {capacity}")]
    CacheOverflow {
        uav: usize,
        demanded: usize,
        capacity: usize,
    },
}

/// Errors raised while loading configuration or writing results.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl HarnessError {
    /// Process exit code: 2 for usage and configuration problems, 3 for
    /// everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Config(_) => 2,
            _ => 3,
        }
    }
}
