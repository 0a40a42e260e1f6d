use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cross::{
    cross_approximate_with, lagrange_matrix, make_far_shell, CrossBasis, RowPivot, Termination,
};
use crate::geometry::{ClusterTree, Point};
use crate::kernel::PairKernel;
use crate::linalg::Matrix;
use crate::scalar::Real;

use super::H2Error;

/// How cluster bases are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisMode {
    /// Explicit matrices at scope leaves, transfer matrices above.
    #[default]
    Nested,
    /// Explicit `Φ(t)` for every cluster that appears in a block.
    Uniform,
}

/// Parameters of the per-cluster cross approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisOptions<T> {
    pub eps: T,
    pub k_max: usize,
    pub eta: T,
    pub shell_samples: usize,
    pub row_pivot: RowPivot,
    pub mode: BasisMode,
}

/// Basis data of one cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisNode<T> {
    pub cluster: usize,
    /// Tree-order positions of the cluster-point pivots.
    pub pivots: Vec<usize>,
    pub pivot_points: Vec<Point<T>>,
    /// `|t| × k_t`, present at scope leaves (every node in uniform mode).
    pub leaf: Option<Matrix<T>>,
    /// `k_t × k_parent`, present when the parent carries a nested basis.
    pub transfer: Option<Matrix<T>>,
    /// Construction record; absent for deserialized operators.
    pub cross: Option<CrossBasis<T>>,
}

impl<T: Real> BasisNode<T> {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn scalar_count(&self) -> usize {
        self.leaf.as_ref().map_or(0, |m| m.rows() * m.cols())
            + self.transfer.as_ref().map_or(0, |m| m.rows() * m.cols())
    }
}

/// Cluster bases of one side (rows or columns) of an H²-matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterBasisSet<T> {
    pub mode: BasisMode,
    nodes: Vec<Option<BasisNode<T>>>,
}

impl<T: Real> ClusterBasisSet<T> {
    /// Assembles a set from nodes indexed by cluster id.
    pub fn from_nodes(mode: BasisMode, nodes: Vec<Option<BasisNode<T>>>) -> Self {
        Self { mode, nodes }
    }

    pub fn node(&self, id: usize) -> Option<&BasisNode<T>> {
        self.nodes.get(id).and_then(Option::as_ref)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &BasisNode<T>> {
        self.nodes.iter().flatten()
    }

    pub fn slots(&self) -> &[Option<BasisNode<T>>] {
        &self.nodes
    }

    pub fn rank(&self, id: usize) -> usize {
        self.node(id).map_or(0, BasisNode::rank)
    }

    pub fn len(&self) -> usize {
        self.nodes().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scalar_count(&self) -> usize {
        self.nodes().map(BasisNode::scalar_count).sum()
    }

    pub fn max_rank(&self) -> usize {
        self.nodes().map(BasisNode::rank).max().unwrap_or(0)
    }

    /// Clusters whose cross approximation hit `k_max`, with the achieved
    /// relative residual.
    pub fn rank_exhausted(&self) -> Vec<(usize, T)> {
        self.nodes()
            .filter_map(|n| {
                let cb = n.cross.as_ref()?;
                (cb.termination() == Termination::RankExhausted)
                    .then(|| (n.cluster, cb.final_residual() / cb.initial_max()))
            })
            .collect()
    }

    /// Explicit `|t| × k_t` basis of cluster `id`, expanding transfers.
    pub fn expanded(&self, tree: &ClusterTree<T>, id: usize) -> Result<Matrix<T>, H2Error> {
        let node = self.node(id).ok_or(H2Error::MissingBasis(id))?;
        if let Some(leaf) = &node.leaf {
            return Ok(leaf.clone());
        }
        let children = tree.cluster(id).children.ok_or(H2Error::MissingBasis(id))?;
        let mut out = Matrix::zeros(tree.cluster(id).size(), node.rank());
        let mut offset = 0;
        for c in children {
            let child = self.node(c).ok_or(H2Error::MissingBasis(c))?;
            let t = child.transfer.as_ref().ok_or(H2Error::MissingBasis(c))?;
            let part = self.expanded(tree, c)?.matmul(t)?;
            for r in 0..part.rows() {
                out.row_mut(offset + r).copy_from_slice(part.row(r));
            }
            offset += part.rows();
        }
        Ok(out)
    }
}

/// Marks the clusters that need a basis and which of them store it
/// explicitly. Returns `(in_scope, explicit)` indexed by cluster id.
pub fn basis_scope<T: Real>(
    tree: &ClusterTree<T>,
    block_clusters: &[usize],
    n_min_h2: usize,
    mode: BasisMode,
) -> (Vec<bool>, Vec<bool>) {
    let n = tree.len();
    let mut scope = vec![false; n];
    let mut explicit = vec![false; n];
    if mode == BasisMode::Uniform {
        for &c in block_clusters {
            scope[c] = true;
            explicit[c] = true;
        }
        return (scope, explicit);
    }
    let mut stack: Vec<usize> = block_clusters.to_vec();
    while let Some(c) = stack.pop() {
        if std::mem::replace(&mut scope[c], true) {
            continue;
        }
        match tree.cluster(c).children {
            Some(ch) if ch.iter().all(|&k| tree.cluster(k).size() >= n_min_h2) => stack.extend(ch),
            _ => explicit[c] = true,
        }
    }
    (scope, explicit)
}

/// `U(t)_{ip} = w(x_i) L^t_p(x_i)` for the cluster points `x_i` of `t`.
pub fn build_leaf_basis<T: Real, K: PairKernel<T>>(
    cb: &CrossBasis<T>,
    kernel: &K,
    cluster_points: &[Point<T>],
    weights: &[T],
) -> Matrix<T> {
    let mut u = lagrange_matrix(cb, kernel, cluster_points);
    u.scale_rows(weights);
    u
}

/// `T_{t't} = f([x]_{t'}, [v]_t) C_t^{-1}`, the Lagrange functions of the
/// parent evaluated at the child's pivots.
pub fn build_transfer<T: Real, K: PairKernel<T>>(
    parent: &CrossBasis<T>,
    child: &CrossBasis<T>,
    kernel: &K,
) -> Matrix<T> {
    lagrange_matrix(parent, kernel, child.x_points())
}

/// `F(t,s)_{pq} = f(x^t_p, y^s_q)`.
pub fn build_coupling<T: Real, K: PairKernel<T>>(
    row_pivots: &[Point<T>],
    col_pivots: &[Point<T>],
    kernel: &K,
) -> Matrix<T> {
    Matrix::from_fn(row_pivots.len(), col_pivots.len(), |p, q| {
        kernel.eval(&row_pivots[p], &col_pivots[q])
    })
}

/// Builds the bases of one side. `kernel` takes the point of this side as
/// its first argument; `points` and `weights` are in original numbering
/// (`weights` empty means unit weights).
pub fn build_cluster_basis<T: Real, K: PairKernel<T>>(
    tree: &ClusterTree<T>,
    points: &[Point<T>],
    weights: &[T],
    kernel: &K,
    block_clusters: &[usize],
    n_min_h2: usize,
    opts: &BasisOptions<T>,
) -> Result<ClusterBasisSet<T>, H2Error> {
    let (scope, explicit) = basis_scope(tree, block_clusters, n_min_h2, opts.mode);
    let ids: Vec<usize> = (0..tree.len()).filter(|&c| scope[c]).collect();
    let cluster_points = |c: usize| -> Vec<Point<T>> { tree.indices(c).iter().map(|&i| points[i]).collect() };
    let weight = |i: usize| weights.get(i).copied().unwrap_or_else(T::one);

    let crosses: Vec<CrossBasis<T>> = ids
        .par_iter()
        .map(|&c| {
            let shell = make_far_shell(&tree.cluster(c).bbox, opts.eta, opts.shell_samples)?;
            let mut cb =
                cross_approximate_with(&cluster_points(c), &shell, kernel, opts.eps, opts.k_max, opts.row_pivot)?;
            cb.cluster_id = Some(c);
            Ok(cb)
        })
        .collect::<Result<_, H2Error>>()?;
    let mut slot = vec![usize::MAX; tree.len()];
    for (pos, &c) in ids.iter().enumerate() {
        slot[c] = pos;
    }

    let built: Vec<BasisNode<T>> = ids
        .par_iter()
        .zip(crosses.par_iter())
        .map(|(&c, cb)| {
            let cl = tree.cluster(c);
            let leaf = explicit[c].then(|| {
                let w: Vec<T> = tree.indices(c).iter().map(|&i| weight(i)).collect();
                build_leaf_basis(cb, kernel, &cluster_points(c), &w)
            });
            let transfer = match (opts.mode, cl.parent) {
                (BasisMode::Nested, Some(p)) if scope[p] && !explicit[p] => {
                    Some(build_transfer(&crosses[slot[p]], cb, kernel))
                }
                _ => None,
            };
            BasisNode {
                cluster: c,
                pivots: cb.x_pivots().iter().map(|&i| cl.start + i).collect(),
                pivot_points: cb.x_points().to_vec(),
                leaf,
                transfer,
                cross: Some(cb.clone()),
            }
        })
        .collect();

    let mut nodes: Vec<Option<BasisNode<T>>> = vec![None; tree.len()];
    for node in built {
        let c = node.cluster;
        nodes[c] = Some(node);
    }
    Ok(ClusterBasisSet::from_nodes(opts.mode, nodes))
}
