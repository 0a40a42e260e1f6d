use std::ops::Range;

use crate::scalar::Real;

use super::{BBox, GeometryError, PointCloud};

/// A node of the cluster tree. Its indices are the contiguous range
/// `start..end` of the tree permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<T> {
    pub id: usize,
    pub start: usize,
    pub end: usize,
    pub bbox: BBox<T>,
    pub children: Option<[usize; 2]>,
    pub parent: Option<usize>,
    pub level: usize,
}

impl<T> Cluster<T> {
    #[inline]
    pub fn size(&self) -> usize {
        self.end - self.start
    }

    #[inline]
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Binary cluster tree built by geometric bisection.
///
/// Clusters are stored in depth-first pre-order, so the root has id 0 and
/// every parent precedes its children.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTree<T> {
    clusters: Vec<Cluster<T>>,
    perm: Vec<usize>,
    depth: usize,
}

impl<T: Real> ClusterTree<T> {
    /// Reassembles a tree from its parts, checking structural consistency.
    pub fn from_parts(clusters: Vec<Cluster<T>>, perm: Vec<usize>) -> Result<Self, GeometryError> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(GeometryError::InvalidTree("permutation is not a bijection".into()));
            }
        }
        if clusters.is_empty() || clusters[0].start != 0 || clusters[0].end != n {
            return Err(GeometryError::InvalidTree("root must cover all indices".into()));
        }
        for (i, c) in clusters.iter().enumerate() {
            if c.id != i || c.start > c.end || c.end > n {
                return Err(GeometryError::InvalidTree(format!("cluster {i} malformed")));
            }
            if let Some([a, b]) = c.children {
                let ok = a > i
                    && b > i
                    && a < clusters.len()
                    && b < clusters.len()
                    && clusters[a].start == c.start
                    && clusters[a].end == clusters[b].start
                    && clusters[b].end == c.end
                    && clusters[a].parent == Some(i)
                    && clusters[b].parent == Some(i);
                if !ok {
                    return Err(GeometryError::InvalidTree(format!("children of {i} malformed")));
                }
            }
        }
        let depth = clusters.iter().map(|c| c.level).max().unwrap_or(0) + 1;
        Ok(Self {
            clusters,
            perm,
            depth,
        })
    }

    pub fn root(&self) -> &Cluster<T> {
        &self.clusters[0]
    }

    pub fn cluster(&self, id: usize) -> &Cluster<T> {
        &self.clusters[id]
    }

    pub fn clusters(&self) -> &[Cluster<T>] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Number of indices (points) covered by the tree.
    pub fn num_indices(&self) -> usize {
        self.perm.len()
    }

    /// `perm[position] = original index`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn inverse_perm(&self) -> Vec<usize> {
        let mut inv = vec![0; self.perm.len()];
        for (pos, &orig) in self.perm.iter().enumerate() {
            inv[orig] = pos;
        }
        inv
    }

    /// `L(T)`: maximum level plus one.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Cluster<T>> {
        self.clusters.iter().filter(|c| c.is_leaf())
    }

    /// Original indices of the members of cluster `id`.
    pub fn indices(&self, id: usize) -> &[usize] {
        &self.perm[self.clusters[id].range()]
    }

    /// Reorders a vector given in original numbering into tree order.
    pub fn to_tree_order<V: Copy>(&self, x: &[V]) -> Vec<V> {
        self.perm.iter().map(|&i| x[i]).collect()
    }

    /// Inverse of [`Self::to_tree_order`].
    pub fn from_tree_order<V: Copy + Default>(&self, x: &[V]) -> Vec<V> {
        let mut out = vec![V::default(); x.len()];
        for (pos, &orig) in self.perm.iter().enumerate() {
            out[orig] = x[pos];
        }
        out
    }
}

/// Builds a cluster tree by bisection along the longest bounding-box axis at
/// the coordinate median. Ties in the coordinate are ordered by index.
pub fn build_cluster_tree<T: Real>(
    pc: &PointCloud<T>,
    n_min: usize,
) -> Result<ClusterTree<T>, GeometryError> {
    if pc.is_empty() {
        return Err(GeometryError::EmptyCloud);
    }
    if n_min == 0 {
        return Err(GeometryError::InvalidLeafSize);
    }
    let mut perm: Vec<usize> = (0..pc.len()).collect();
    let mut clusters = Vec::new();
    split(pc, n_min, &mut perm, 0, pc.len(), None, 0, &mut clusters);
    ClusterTree::from_parts(clusters, perm)
}

#[allow(clippy::too_many_arguments)]
fn split<T: Real>(
    pc: &PointCloud<T>,
    n_min: usize,
    perm: &mut [usize],
    start: usize,
    end: usize,
    parent: Option<usize>,
    level: usize,
    clusters: &mut Vec<Cluster<T>>,
) -> usize {
    let id = clusters.len();
    let bbox = BBox::from_points(perm[start..end].iter().map(|&i| pc.point(i)));
    clusters.push(Cluster {
        id,
        start,
        end,
        bbox,
        children: None,
        parent,
        level,
    });
    let axis = bbox.longest_axis();
    // all points coincident: no split possible
    if end - start <= n_min || bbox.extent(axis) == T::zero() {
        return id;
    }
    perm[start..end].sort_by(|&a, &b| {
        pc.point(a)[axis]
            .partial_cmp(&pc.point(b)[axis])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mid = start + (end - start) / 2;
    let left = split(pc, n_min, perm, start, mid, Some(id), level + 1, clusters);
    let right = split(pc, n_min, perm, mid, end, Some(id), level + 1, clusters);
    clusters[id].children = Some([left, right]);
    id
}
