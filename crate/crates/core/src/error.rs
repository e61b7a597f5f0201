use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CcnError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("division by zero in GF(2^m)")]
    DivisionByZero,

    #[error("degenerate batch: dimension {dim} has variance {variance:e}")]
    DegenerateBatch { dim: usize, variance: f64 },

    #[error("numerical fault: {0}")]
    NumericalFault(String),

    #[error("bad model file: {0}")]
    ModelFormat(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("cannot read {}: {source}", path.display())]
    Unreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = CcnError> = std::result::Result<T, E>;
