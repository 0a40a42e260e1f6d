//! Compressed operators: H-matrices with ACA blocks and H²-matrices with
//! nested cluster bases from harmonic cross approximation.

mod aca;
mod basis;
mod hmatrix;
mod io;
mod matrix;
mod storage;

use thiserror::Error;

use crate::cross::CrossError;
use crate::linalg::LinalgError;

pub use aca::{aca_block, AcaFactors, DenseBlock, LowRankBlock};
pub use basis::{
    basis_scope, build_cluster_basis, build_coupling, build_leaf_basis, build_transfer, BasisMode, BasisNode,
    BasisOptions, ClusterBasisSet,
};
pub use hmatrix::{assemble_h, HMatrix};
pub use io::{read_h2, write_h2, FORMAT_MAGIC, FORMAT_VERSION};
pub use matrix::{assemble_dense_block, assemble_h2, BlockKind, CouplingBlock, H2Matrix, H2Options};
pub use storage::StorageReport;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum H2Error {
    #[error("vector length {got} does not match operator dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cluster {0} has no basis")]
    MissingBasis(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed operator container: {0}")]
    Format(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Cross(#[from] CrossError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl From<std::io::Error> for H2Error {
    fn from(e: std::io::Error) -> Self {
        H2Error::Io(e.to_string())
    }
}

/// A matrix that can be applied to vectors in original numbering.
pub trait LinearOperator<T>: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn matvec(&self, x: &[T]) -> Result<Vec<T>, H2Error>;
}

pub fn check_len(expected: usize, got: usize) -> Result<(), H2Error> {
    if expected == got {
        Ok(())
    } else {
        Err(H2Error::DimensionMismatch { expected, got })
    }
}

/// Adds per-block row contributions in block order.
pub(crate) fn scatter_add<T: crate::scalar::Real>(
    y: &mut [T],
    parts: Vec<(std::ops::Range<usize>, Vec<T>)>,
) {
    for (range, part) in parts {
        for (a, b) in y[range].iter_mut().zip(part) {
            *a += b;
        }
    }
}
