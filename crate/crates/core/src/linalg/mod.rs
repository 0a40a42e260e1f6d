//! Small dense linear algebra: row-major matrices, partial-pivoting LU,
//! and a Jacobi SVD used as a reference baseline.

mod lu;
mod matrix;
mod svd;

pub use lu::{det_from_lu, lu_factor, lu_solve, LuFactors, SINGULAR_RTOL};
pub use matrix::Matrix;
pub use svd::{norm2_estimate, singular_values, svd_rank_error};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("singular matrix: pivot {pivot:e} at step {step}")]
    SingularMatrix { step: usize, pivot: f64 },
    #[error("data length mismatch: expected {expected}, got {got}")]
    InvalidData { expected: usize, got: usize },
    #[error("rank {k} out of range (must be below {bound})")]
    RankOutOfRange { k: usize, bound: usize },
}
