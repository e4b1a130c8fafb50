use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FinslerError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported: {0}")]
    Capability(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("singular metric at {point}: {reason}")]
    SingularMetric { point: String, reason: String },
    #[error("degenerate field: {0}")]
    DegenerateField(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, FinslerError>;
