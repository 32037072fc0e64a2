use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpsError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid scenario: {0}")]
    Validation(String),

    #[error("fault references unknown {0}")]
    UnknownFault(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("instance too large for enumeration: {binaries} free binaries > limit {limit}")]
    TooLarge { binaries: usize, limit: usize },

    #[error("master problem infeasible: {0}")]
    MasterInfeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SpsError>;
