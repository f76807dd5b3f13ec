use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite function value {value} at node ({x}, {y})")]
    NonFinite { x: f64, y: f64, value: f64 },

    #[error("quadrature did not converge: estimated error {achieved:e}")]
    Quadrature { achieved: f64 },

    #[error("boundary trace inconsistent at vertex {vertex}: {a} vs {b}")]
    TraceMismatch {
        vertex: &'static str,
        a: f64,
        b: f64,
    },

    #[error("bad table file: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
