use rayon::prelude::*;

use crate::geometry::{BlockPartition, ClusterTree, PointCloud};
use crate::kernel::Kernel;
use crate::scalar::Real;

use super::aca::{DenseBlock, LowRankBlock};
use super::matrix::{build_dense, build_lowrank, split_far};
use super::storage::StorageReport;
use super::{check_len, scatter_add, H2Error, LinearOperator};

/// H-matrix: independent ACA approximations on admissible blocks, dense
/// near-field blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct HMatrix<T> {
    row_tree: ClusterTree<T>,
    col_tree: ClusterTree<T>,
    lowrank: Vec<LowRankBlock<T>>,
    dense: Vec<DenseBlock<T>>,
}

#[allow(clippy::too_many_arguments)]
pub fn assemble_h<T: Real>(
    kernel: &Kernel<T>,
    rows: &PointCloud<T>,
    cols: &PointCloud<T>,
    row_tree: &ClusterTree<T>,
    col_tree: &ClusterTree<T>,
    partition: &BlockPartition<T>,
    eps: T,
    k_max: usize,
) -> Result<HMatrix<T>, H2Error> {
    check_len(rows.len(), row_tree.num_indices())?;
    check_len(cols.len(), col_tree.num_indices())?;
    if !(eps > T::zero()) {
        return Err(H2Error::InvalidParameter(format!("eps must be > 0, got {eps}")));
    }
    let (lowrank, mut dense) = split_far(
        partition
            .admissible
            .par_iter()
            .map(|b| build_lowrank(kernel, rows, cols, row_tree, col_tree, b, eps, k_max))
            .collect(),
    );
    dense.par_extend(
        partition
            .nonadmissible
            .par_iter()
            .map(|b| build_dense(kernel, rows, cols, row_tree, col_tree, b)),
    );
    Ok(HMatrix {
        row_tree: row_tree.clone(),
        col_tree: col_tree.clone(),
        lowrank,
        dense,
    })
}

impl<T: Real> HMatrix<T> {
    pub fn lowrank_blocks(&self) -> &[LowRankBlock<T>] {
        &self.lowrank
    }

    pub fn dense_blocks(&self) -> &[DenseBlock<T>] {
        &self.dense
    }

    pub fn storage(&self) -> StorageReport {
        StorageReport::for_h(
            self.row_tree.num_indices(),
            self.col_tree.num_indices(),
            self.lowrank.iter().map(LowRankBlock::scalar_count).sum(),
            self.dense.iter().map(DenseBlock::scalar_count).sum(),
        )
    }

    pub fn covered_entries(&self) -> usize {
        self.lowrank.iter().map(|b| b.rows.len() * b.cols.len()).sum::<usize>()
            + self.dense.iter().map(|b| b.rows.len() * b.cols.len()).sum::<usize>()
    }

    pub fn matvec_tree_order(&self, xt: &[T]) -> Result<Vec<T>, H2Error> {
        check_len(self.col_tree.num_indices(), xt.len())?;
        let mut yt = vec![T::zero(); self.row_tree.num_indices()];
        let lr: Vec<_> = self.lowrank.par_iter().map(|b| (b.rows.clone(), b.apply(xt))).collect();
        scatter_add(&mut yt, lr);
        let dn: Vec<_> = self.dense.par_iter().map(|b| (b.rows.clone(), b.apply(xt))).collect();
        scatter_add(&mut yt, dn);
        Ok(yt)
    }
}

impl<T: Real> LinearOperator<T> for HMatrix<T> {
    fn nrows(&self) -> usize {
        self.row_tree.num_indices()
    }

    fn ncols(&self) -> usize {
        self.col_tree.num_indices()
    }

    fn matvec(&self, x: &[T]) -> Result<Vec<T>, H2Error> {
        check_len(self.ncols(), x.len())?;
        let yt = self.matvec_tree_order(&self.col_tree.to_tree_order(x))?;
        Ok(self.row_tree.from_tree_order(&yt))
    }
}
