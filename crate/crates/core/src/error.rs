//! Error types shared across the solver.

use thiserror::Error;

/// Errors produced by the field, semigroup, and solver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("{name} must be {requirement}, got {value}")]
    InvalidParameter {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("grid mismatch: {context}")]
    GridMismatch { context: &'static str },

    #[error(
        "spectrum is not conjugate-symmetric: relative imaginary residue {residue:e} \
         exceeds {limit:e}"
    )]
    SymmetryViolation { residue: f64, limit: f64 },

    #[error("fixed-point iteration did not converge within {max_iter} iterations \
             (last distance {last_diff:e})")]
    NonConvergence {
        max_iter: usize,
        last_diff: f64,
        diffs: Vec<f64>,
    },

    #[error("explicit step size {dt:e} violates the stability bound {bound:e}")]
    UnstableStep { dt: f64, bound: f64 },

    #[error("snapshot format: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
