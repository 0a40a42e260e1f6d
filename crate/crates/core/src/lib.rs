#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cross;
pub mod geometry;
pub mod h2;
pub mod harness;
pub mod kernel;
pub mod linalg;
pub mod scalar;

#[cfg(test)]
mod testing;

pub type DenseMatrix = linalg::Matrix<f64>;
pub type LuFactors = linalg::LuFactors<f64>;
pub type PointCloud = geometry::PointCloud<f64>;
pub type ClusterTree = geometry::ClusterTree<f64>;
pub type BlockPartition = geometry::BlockPartition<f64>;
pub type Kernel = kernel::Kernel<f64>;
pub type FarShell = cross::FarShell<f64>;
pub type CrossBasis = cross::CrossBasis<f64>;
pub type ClusterBasisSet = h2::ClusterBasisSet<f64>;
pub type H2Matrix = h2::H2Matrix<f64>;
pub type HMatrix = h2::HMatrix<f64>;
