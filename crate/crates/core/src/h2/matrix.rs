use std::ops::Range;

use rayon::prelude::*;

use crate::cross::RowPivot;
use crate::geometry::{Block, BlockPartition, ClusterTree, PointCloud};
use crate::kernel::{Kernel, Transposed};
use crate::linalg::Matrix;
use crate::scalar::Real;

use super::aca::{aca_block, DenseBlock, LowRankBlock};
use super::basis::{build_cluster_basis, build_coupling, BasisMode, BasisOptions, ClusterBasisSet};
use super::storage::StorageReport;
use super::{check_len, scatter_add, H2Error, LinearOperator};

/// Build parameters of an H²-matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H2Options<T> {
    pub eps: T,
    /// Rank cap of cross approximation and ACA.
    pub k_max: usize,
    /// Admissible blocks with a side below this use ACA instead of bases.
    pub n_min_h2: usize,
    /// Number of shell samples `m`.
    pub shell_samples: usize,
    pub row_pivot: RowPivot,
    pub mode: BasisMode,
}

impl<T: Real> H2Options<T> {
    /// Defaults: `k_max = 150`, `n_min_h2 = 400`, `m = 768`.
    pub fn new(eps: T) -> Self {
        Self {
            eps,
            k_max: 150,
            n_min_h2: 400,
            shell_samples: 768,
            row_pivot: RowPivot::default(),
            mode: BasisMode::Nested,
        }
    }
}

/// Coupling matrix of one H² block.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingBlock<T> {
    pub row: usize,
    pub col: usize,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    pub level: usize,
    /// `k_t × k_s`.
    pub f: Matrix<T>,
}

/// How a partition leaf is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Coupling(usize),
    LowRank(usize),
    Dense(usize),
}

/// H²-matrix: nested row/column bases with coupling matrices on large
/// admissible blocks, ACA blocks on small admissible blocks, and dense
/// blocks for the near field (and for admissible blocks too small to gain
/// from factorization).
#[derive(Debug, Clone, PartialEq)]
pub struct H2Matrix<T> {
    pub(crate) row_tree: ClusterTree<T>,
    pub(crate) col_tree: ClusterTree<T>,
    pub(crate) row_basis: ClusterBasisSet<T>,
    pub(crate) col_basis: ClusterBasisSet<T>,
    pub(crate) couplings: Vec<CouplingBlock<T>>,
    pub(crate) aca_blocks: Vec<LowRankBlock<T>>,
    pub(crate) nearfield: Vec<DenseBlock<T>>,
    pub(crate) eps: T,
    pub(crate) eta: T,
}

/// Exact block `A|_{ts}` with `a_ij = ξ_i ζ_j f(x_i, y_j)` in tree order.
pub fn assemble_dense_block<T: Real>(
    kernel: &Kernel<T>,
    rows: &PointCloud<T>,
    cols: &PointCloud<T>,
    row_tree: &ClusterTree<T>,
    col_tree: &ClusterTree<T>,
    t: usize,
    s: usize,
) -> Matrix<T> {
    let (ri, ci) = (row_tree.indices(t), col_tree.indices(s));
    Matrix::from_fn(ri.len(), ci.len(), |i, j| kernel.entry(ri[i], ci[j], rows, cols))
}

/// ACA on an admissible block; blocks whose factors would not be smaller
/// than the block itself are stored densely.
#[allow(clippy::too_many_arguments)]
pub(crate) fn build_lowrank<T: Real>(
    kernel: &Kernel<T>,
    rows: &PointCloud<T>,
    cols: &PointCloud<T>,
    row_tree: &ClusterTree<T>,
    col_tree: &ClusterTree<T>,
    b: &Block,
    eps: T,
    k_max: usize,
) -> Result<LowRankBlock<T>, DenseBlock<T>> {
    let (ri, ci) = (row_tree.indices(b.row), col_tree.indices(b.col));
    let f = aca_block(ri.len(), ci.len(), |i, j| kernel.entry(ri[i], ci[j], rows, cols), eps, k_max);
    if f.a.cols() * (ri.len() + ci.len()) >= ri.len() * ci.len() {
        return Err(build_dense(kernel, rows, cols, row_tree, col_tree, b));
    }
    Ok(LowRankBlock {
        row: b.row,
        col: b.col,
        rows: row_tree.cluster(b.row).range(),
        cols: col_tree.cluster(b.col).range(),
        a: f.a,
        b: f.b,
        converged: f.converged,
    })
}

/// Splits ACA results into low-rank and dense blocks, preserving order.
pub(crate) fn split_far<T>(
    built: Vec<Result<LowRankBlock<T>, DenseBlock<T>>>,
) -> (Vec<LowRankBlock<T>>, Vec<DenseBlock<T>>) {
    let mut lowrank = Vec::new();
    let mut dense = Vec::new();
    for b in built {
        match b {
            Ok(l) => lowrank.push(l),
            Err(d) => dense.push(d),
        }
    }
    (lowrank, dense)
}

pub(crate) fn build_dense<T: Real>(
    kernel: &Kernel<T>,
    rows: &PointCloud<T>,
    cols: &PointCloud<T>,
    row_tree: &ClusterTree<T>,
    col_tree: &ClusterTree<T>,
    b: &Block,
) -> DenseBlock<T> {
    DenseBlock {
        row: b.row,
        col: b.col,
        rows: row_tree.cluster(b.row).range(),
        cols: col_tree.cluster(b.col).range(),
        data: assemble_dense_block(kernel, rows, cols, row_tree, col_tree, b.row, b.col),
    }
}

fn validate<T: Real>(
    rows: &PointCloud<T>,
    cols: &PointCloud<T>,
    row_tree: &ClusterTree<T>,
    col_tree: &ClusterTree<T>,
) -> Result<(), H2Error> {
    check_len(rows.len(), row_tree.num_indices())?;
    check_len(cols.len(), col_tree.num_indices())
}

/// Assembles an H²-matrix over `partition`.
///
/// Every cluster in an admissible block whose sides both have at least
/// `n_min_h2` indices gets one cross basis, shared by all its blocks.
pub fn assemble_h2<T: Real>(
    kernel: &Kernel<T>,
    rows: &PointCloud<T>,
    cols: &PointCloud<T>,
    row_tree: &ClusterTree<T>,
    col_tree: &ClusterTree<T>,
    partition: &BlockPartition<T>,
    opts: &H2Options<T>,
) -> Result<H2Matrix<T>, H2Error> {
    validate(rows, cols, row_tree, col_tree)?;
    if !(opts.eps > T::zero()) {
        return Err(H2Error::InvalidParameter(format!("eps must be > 0, got {}", opts.eps)));
    }
    let (h2_blocks, aca_list): (Vec<Block>, Vec<Block>) = partition.admissible.iter().partition(|b| {
        row_tree.cluster(b.row).size() >= opts.n_min_h2 && col_tree.cluster(b.col).size() >= opts.n_min_h2
    });
    let mut row_ids: Vec<usize> = h2_blocks.iter().map(|b| b.row).collect();
    let mut col_ids: Vec<usize> = h2_blocks.iter().map(|b| b.col).collect();
    for ids in [&mut row_ids, &mut col_ids] {
        ids.sort_unstable();
        ids.dedup();
    }
    let bopts = BasisOptions {
        eps: opts.eps,
        k_max: opts.k_max,
        eta: partition.eta,
        shell_samples: opts.shell_samples,
        row_pivot: opts.row_pivot,
        mode: opts.mode,
    };
    let xi: Vec<T> = (0..rows.len()).map(|i| kernel.row_weight(i)).collect();
    let zeta: Vec<T> = (0..cols.len()).map(|j| kernel.col_weight(j)).collect();
    let row_basis = build_cluster_basis(row_tree, rows.points(), &xi, kernel, &row_ids, opts.n_min_h2, &bopts)?;
    let col_basis = build_cluster_basis(
        col_tree,
        cols.points(),
        &zeta,
        &Transposed(kernel),
        &col_ids,
        opts.n_min_h2,
        &bopts,
    )?;

    let couplings = h2_blocks
        .par_iter()
        .map(|b| {
            let rn = row_basis.node(b.row).ok_or(H2Error::MissingBasis(b.row))?;
            let cn = col_basis.node(b.col).ok_or(H2Error::MissingBasis(b.col))?;
            Ok(CouplingBlock {
                row: b.row,
                col: b.col,
                rows: row_tree.cluster(b.row).range(),
                cols: col_tree.cluster(b.col).range(),
                level: b.level,
                f: build_coupling(&rn.pivot_points, &cn.pivot_points, kernel),
            })
        })
        .collect::<Result<Vec<_>, H2Error>>()?;
    let (aca_blocks, mut nearfield) = split_far(
        aca_list
            .par_iter()
            .map(|b| build_lowrank(kernel, rows, cols, row_tree, col_tree, b, opts.eps, opts.k_max))
            .collect(),
    );
    nearfield.par_extend(
        partition
            .nonadmissible
            .par_iter()
            .map(|b| build_dense(kernel, rows, cols, row_tree, col_tree, b)),
    );

    Ok(H2Matrix {
        row_tree: row_tree.clone(),
        col_tree: col_tree.clone(),
        row_basis,
        col_basis,
        couplings,
        aca_blocks,
        nearfield,
        eps: opts.eps,
        eta: partition.eta,
    })
}

impl<T: Real> H2Matrix<T> {
    pub fn row_tree(&self) -> &ClusterTree<T> {
        &self.row_tree
    }

    pub fn col_tree(&self) -> &ClusterTree<T> {
        &self.col_tree
    }

    pub fn row_basis(&self) -> &ClusterBasisSet<T> {
        &self.row_basis
    }

    pub fn col_basis(&self) -> &ClusterBasisSet<T> {
        &self.col_basis
    }

    pub fn couplings(&self) -> &[CouplingBlock<T>] {
        &self.couplings
    }

    pub fn aca_blocks(&self) -> &[LowRankBlock<T>] {
        &self.aca_blocks
    }

    pub fn nearfield(&self) -> &[DenseBlock<T>] {
        &self.nearfield
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    /// Locates the storage of partition leaf `(t, s)`.
    pub fn find_block(&self, t: usize, s: usize) -> Option<BlockKind> {
        if let Some(i) = self.couplings.iter().position(|b| b.row == t && b.col == s) {
            return Some(BlockKind::Coupling(i));
        }
        if let Some(i) = self.aca_blocks.iter().position(|b| b.row == t && b.col == s) {
            return Some(BlockKind::LowRank(i));
        }
        self.nearfield
            .iter()
            .position(|b| b.row == t && b.col == s)
            .map(BlockKind::Dense)
    }

    /// The stored approximation of a block as an explicit matrix (tree order).
    pub fn expand_block(&self, kind: BlockKind) -> Result<Matrix<T>, H2Error> {
        match kind {
            BlockKind::Coupling(i) => {
                let b = &self.couplings[i];
                let u = self.row_basis.expanded(&self.row_tree, b.row)?;
                let v = self.col_basis.expanded(&self.col_tree, b.col)?;
                Ok(u.matmul(&b.f)?.matmul(&v.transpose())?)
            }
            BlockKind::LowRank(i) => Ok(self.aca_blocks[i].to_dense()),
            BlockKind::Dense(i) => Ok(self.nearfield[i].data.clone()),
        }
    }

    pub fn storage(&self) -> StorageReport {
        let n = self.row_tree.num_indices();
        let m = self.col_tree.num_indices();
        let basis = self.row_basis.scalar_count() + self.col_basis.scalar_count();
        let coupling: usize = self.couplings.iter().map(|b| b.f.rows() * b.f.cols()).sum();
        let lowrank: usize = self.aca_blocks.iter().map(LowRankBlock::scalar_count).sum();
        let dense: usize = self.nearfield.iter().map(DenseBlock::scalar_count).sum();
        StorageReport::for_h2(n, m, basis, coupling, lowrank, dense)
    }

    /// Sum of block areas; equals `N·M` for a valid partition.
    pub fn covered_entries(&self) -> usize {
        let area = |r: &Range<usize>, c: &Range<usize>| r.len() * c.len();
        self.couplings.iter().map(|b| area(&b.rows, &b.cols)).sum::<usize>()
            + self.aca_blocks.iter().map(|b| area(&b.rows, &b.cols)).sum::<usize>()
            + self.nearfield.iter().map(|b| area(&b.rows, &b.cols)).sum::<usize>()
    }

    /// Multiply-add count of one matrix-vector product.
    pub fn matvec_flops(&self) -> usize {
        2 * self.storage().h2_units
    }

    /// Forward transform `x̂_s = V(s)ᵀ x|_s` (nested through transfers).
    fn forward(&self, xt: &[T]) -> Vec<Vec<T>> {
        let basis = &self.col_basis;
        let mut xhat: Vec<Vec<T>> = basis
            .slots()
            .par_iter()
            .enumerate()
            .map(|(c, slot)| match slot {
                Some(n) => match &n.leaf {
                    Some(v) => {
                        let mut out = vec![T::zero(); n.rank()];
                        v.gemv_t_acc(&xt[self.col_tree.cluster(c).range()], &mut out);
                        out
                    }
                    None => Vec::new(),
                },
                None => Vec::new(),
            })
            .collect();
        // children have larger ids than their parent
        for c in (0..xhat.len()).rev() {
            let Some(n) = basis.node(c) else { continue };
            if n.leaf.is_some() {
                continue;
            }
            let mut acc = vec![T::zero(); n.rank()];
            for ch in self.col_tree.cluster(c).children.into_iter().flatten() {
                if let Some(t) = basis.node(ch).and_then(|x| x.transfer.as_ref()) {
                    t.gemv_t_acc(&xhat[ch], &mut acc);
                }
            }
            xhat[c] = acc;
        }
        xhat
    }

    /// Backward transform: pushes `ŷ_t` down through transfers and applies
    /// the explicit bases.
    fn backward(&self, mut yhat: Vec<Vec<T>>, yt: &mut [T]) {
        let basis = &self.row_basis;
        for c in 0..yhat.len() {
            let Some(n) = basis.node(c) else { continue };
            if n.leaf.is_some() || yhat[c].is_empty() {
                continue;
            }
            for ch in self.row_tree.cluster(c).children.into_iter().flatten() {
                if let Some(t) = basis.node(ch).and_then(|x| x.transfer.as_ref()) {
                    let mut add = vec![T::zero(); t.rows()];
                    t.gemv_acc(&yhat[c], &mut add);
                    if yhat[ch].is_empty() {
                        yhat[ch] = add;
                    } else {
                        yhat[ch].iter_mut().zip(add).for_each(|(a, b)| *a += b);
                    }
                }
            }
        }
        let parts: Vec<(Range<usize>, Vec<T>)> = basis
            .slots()
            .par_iter()
            .enumerate()
            .filter_map(|(c, slot)| {
                let u = slot.as_ref()?.leaf.as_ref()?;
                if yhat[c].is_empty() {
                    return None;
                }
                let range = self.row_tree.cluster(c).range();
                let mut out = vec![T::zero(); range.len()];
                u.gemv_acc(&yhat[c], &mut out);
                Some((range, out))
            })
            .collect();
        scatter_add(yt, parts);
    }

    /// `y = A x` in tree order.
    pub fn matvec_tree_order(&self, xt: &[T]) -> Result<Vec<T>, H2Error> {
        check_len(self.col_tree.num_indices(), xt.len())?;
        let mut yt = vec![T::zero(); self.row_tree.num_indices()];
        if !self.couplings.is_empty() {
            let xhat = self.forward(xt);
            let prods: Vec<Vec<T>> = self
                .couplings
                .par_iter()
                .map(|b| {
                    let mut out = vec![T::zero(); b.f.rows()];
                    b.f.gemv_acc(&xhat[b.col], &mut out);
                    out
                })
                .collect();
            let mut yhat: Vec<Vec<T>> = vec![Vec::new(); self.row_tree.len()];
            for (b, p) in self.couplings.iter().zip(prods) {
                let slot = &mut yhat[b.row];
                if slot.is_empty() {
                    *slot = p;
                } else {
                    slot.iter_mut().zip(p).for_each(|(a, v)| *a += v);
                }
            }
            self.backward(yhat, &mut yt);
        }
        let lr: Vec<_> = self.aca_blocks.par_iter().map(|b| (b.rows.clone(), b.apply(xt))).collect();
        scatter_add(&mut yt, lr);
        let dn: Vec<_> = self.nearfield.par_iter().map(|b| (b.rows.clone(), b.apply(xt))).collect();
        scatter_add(&mut yt, dn);
        Ok(yt)
    }
}

impl<T: Real> LinearOperator<T> for H2Matrix<T> {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_block_partition, build_cluster_tree};
    use crate::testing::ellipsoid_points;

    fn setup(n: usize) -> (PointCloud<f64>, ClusterTree<f64>) {
        let pc = PointCloud::new(ellipsoid_points(n)).unwrap();
        let tree = build_cluster_tree(&pc, 20).unwrap();
        (pc, tree)
    }

    fn dense_product(k: &Kernel<f64>, pc: &PointCloud<f64>, x: &[f64]) -> Vec<f64> {
        (0..pc.len())
            .map(|i| (0..pc.len()).map(|j| k.entry(i, j, pc, pc) * x[j]).sum())
            .collect()
    }

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        num / b.iter().map(|y| y * y).sum::<f64>().sqrt()
    }

    #[test]
    fn all_dense_partition_is_exact() {
        let (pc, tree) = setup(300);
        let k = Kernel::newton();
        // η = 0 admits nothing
        let part = build_block_partition(&tree, &tree, 0.0, 20);
        assert!(part.admissible.is_empty());
        let h2 = assemble_h2(&k, &pc, &pc, &tree, &tree, &part, &H2Options::new(1e-4)).unwrap();
        let x: Vec<f64> = (0..300).map(|i| (i as f64).sin()).collect();
        let y = h2.matvec(&x).unwrap();
        let d = dense_product(&k, &pc, &x);
        assert!(rel_err(&y, &d) < 1e-14);
        assert_eq!(h2.storage().compression_h2, 1.0);
        assert_eq!(h2.matvec(&[0.0; 300]).unwrap(), vec![0.0; 300]);
        assert!(h2.matvec(&[0.0; 3]).is_err());
    }

    #[test]
    fn nested_matvec_against_dense() {
        let (pc, tree) = setup(1500);
        let k = Kernel::newton();
        let part = build_block_partition(&tree, &tree, 0.8, 20);
        let mut opts = H2Options::new(1e-6);
        opts.n_min_h2 = 40;
        let h2 = assemble_h2(&k, &pc, &pc, &tree, &tree, &part, &opts).unwrap();
        assert!(!h2.couplings().is_empty());
        assert_eq!(h2.covered_entries(), 1500 * 1500);
        let x = vec![1.0; 1500];
        let err = rel_err(&h2.matvec(&x).unwrap(), &dense_product(&k, &pc, &x));
        assert!(err < 1e-5, "{err}");
        let s = h2.storage();
        assert!(s.compression_h2 < 1.0);
    }

    #[test]
    fn uniform_and_nested_agree() {
        let (pc, tree) = setup(1500);
        let k = Kernel::newton();
        let part = build_block_partition(&tree, &tree, 0.8, 20);
        let mut opts = H2Options::new(1e-5);
        opts.n_min_h2 = 40;
        let nested = assemble_h2(&k, &pc, &pc, &tree, &tree, &part, &opts).unwrap();
        opts.mode = BasisMode::Uniform;
        let uniform = assemble_h2(&k, &pc, &pc, &tree, &tree, &part, &opts).unwrap();
        let x: Vec<f64> = (0..1500).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let a = nested.matvec(&x).unwrap();
        let b = uniform.matvec(&x).unwrap();
        let depth = tree.depth() as f64;
        assert!(rel_err(&a, &b) <= 10.0 * depth * 1e-5);
    }
}
