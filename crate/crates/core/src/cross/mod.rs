//! Cross approximation of kernel restrictions against a sampled far field.

mod approx;
mod chebyshev;
mod shell;

use thiserror::Error;

use crate::linalg::LinalgError;

pub use approx::{
    convergence_csv, convergence_table, cross_approximate, cross_approximate_with, far_field_error, interpolant_eval, lagrange_matrix,
    lagrange_vector, residual_curve, lebesgue_prefix, CrossBasis, RowPivot, FarFieldError, Termination, ZERO_ROW_RTOL,
};
pub use chebyshev::{chebyshev_nodes, chebyshev_reference, ChebyshevInterpolant};
pub use shell::{fibonacci_sphere, make_far_shell, shell_bound_constant, shell_radius, FarShell};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CrossError {
    #[error("far shell needs at least 8 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("cluster box is degenerate (zero diameter)")]
    DegenerateBox,
    #[error("cluster has no points")]
    EmptyCluster,
    #[error("kernel returned a non-finite value on the far shell")]
    NonFiniteKernel,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
