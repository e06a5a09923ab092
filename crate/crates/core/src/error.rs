//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TcmolError {
    /// Bad user-supplied configuration (grids, parameters, sweep lists).
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed curve file; carries the 1-based row number where parsing failed.
    #[error("curve ingestion error at row {row}: {message}")]
    CurveIngestion { row: usize, message: String },

    /// A physics consistency check failed (norms, retention bounds, oracle drift).
    #[error("physics consistency error: {0}")]
    Physics(String),

    /// Numerical failure (NaN in propagation, non-convergent eigensolve, ...).
    #[error("numerical error: {0}")]
    Numerics(String),

    /// A jump was requested that the current state cannot support.
    #[error("invalid jump: {0}")]
    InvalidJump(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TcmolError>;

impl TcmolError {
    /// CLI exit code mapping: 0 success, 1 physics-consistency failure, 2 usage error.
    pub fn exit_code(&self) -> i32 {
        match self {
            TcmolError::Config(_) | TcmolError::CurveIngestion { .. } => 2,
            _ => 1,
        }
    }
}
