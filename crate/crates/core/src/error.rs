use thiserror::Error;

use crate::linalg::QrConvergenceError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("opening [{start}, {end}) removes every site of the M={dimension} lattice")]
    NothingKept { start: f64, end: f64, dimension: usize },

    #[error("eigensolver failed for {context}: {source}")]
    NoConvergence {
        context: String,
        #[source]
        source: QrConvergenceError,
    },

    #[error("Schur reordering failed swapping positions {position} and {}: residual {residual:e}", position + 1)]
    ReorderFailure { position: usize, residual: f64 },

    #[error("too few usable points for a fit: need at least {needed}, have {found}")]
    TooFewPoints { needed: usize, found: usize },

    #[error("Husimi grid carries no weight")]
    EmptyGrid,

    #[error("malformed grid file: {0}")]
    Format(String),

    #[error("Lyapunov estimate did not settle in the chaotic sea after {attempts} attempts")]
    LyapunovNonConvergence { attempts: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
