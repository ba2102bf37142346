use std::path::PathBuf;

use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum BoError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: ({n1}, {l1}) vs ({n2}, {l2})")]
    GridMismatch { n1: usize, l1: f64, n2: usize, l2: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("blowup at t = {t}: max |u| = {max_abs}")]
    Blowup { t: f64, max_abs: f64 },

    #[error("modulation left the tube: {0}")]
    OutsideTube(String),

    #[error("newton iteration did not converge after {iters} iterations (residual {residual:e})")]
    NewtonDiverged { iters: usize, residual: f64 },

    #[error("soliton collision: gap {gap} below {min_gap}")]
    Collision { gap: f64, min_gap: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("field file {path:?}: {reason}")]
    FieldFormat { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BoError>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> BoError {
    BoError::InvalidParameter { name, reason: reason.into() }
}
