//! Point clouds, cluster trees by geometric bisection, and the
//! η-admissibility block partition.

mod bbox;
mod cloud;
mod partition;
mod tree;

pub use bbox::{admissible, distance, distance_sq, BBox, Point};
pub use cloud::PointCloud;
pub use partition::{build_block_partition, Block, BlockPartition};
pub use tree::{build_cluster_tree, Cluster, ClusterTree};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("leaf size must be at least 1")]
    InvalidLeafSize,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid cluster tree: {0}")]
    InvalidTree(String),
}
