use crate::scalar::Real;

use super::{admissible, ClusterTree};

/// A leaf of the block cluster tree: row cluster × column cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block {
    pub row: usize,
    pub col: usize,
    /// Depth of the block in the block cluster tree (root block at 0).
    pub level: usize,
}

/// Leaves of the block cluster tree split into far-field (admissible) and
/// near-field (small) blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition<T> {
    pub admissible: Vec<Block>,
    pub nonadmissible: Vec<Block>,
    pub eta: T,
    pub n_min: usize,
}

impl<T: Real> BlockPartition<T> {
    pub fn len(&self) -> usize {
        self.admissible.len() + self.nonadmissible.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Depth of the block cluster tree (maximum block level plus one).
    pub fn depth(&self) -> usize {
        self.admissible
            .iter()
            .chain(&self.nonadmissible)
            .map(|b| b.level)
            .max()
            .map_or(0, |l| l + 1)
    }
}

/// Recursive descent from the root block: admissible pairs and pairs with a
/// side of at most `n_min` indices become leaves; everything else is
/// subdivided into the product of the children.
pub fn build_block_partition<T: Real>(
    rows: &ClusterTree<T>,
    cols: &ClusterTree<T>,
    eta: T,
    n_min: usize,
) -> BlockPartition<T> {
    let mut part = BlockPartition {
        admissible: Vec::new(),
        nonadmissible: Vec::new(),
        eta,
        n_min,
    };
    let mut stack = vec![(0usize, 0usize, 0usize)];
    while let Some((t, s, level)) = stack.pop() {
        let (ct, cs) = (rows.cluster(t), cols.cluster(s));
        let block = Block {
            row: t,
            col: s,
            level,
        };
        if admissible(&ct.bbox, &cs.bbox, eta) {
            part.admissible.push(block);
            continue;
        }
        if ct.size().min(cs.size()) <= n_min {
            part.nonadmissible.push(block);
            continue;
        }
        // pushed in reverse so blocks are emitted in row-major child order
        match (ct.children, cs.children) {
            (Some(tc), Some(sc)) => {
                for &a in tc.iter().rev() {
                    for &b in sc.iter().rev() {
                        stack.push((a, b, level + 1));
                    }
                }
            }
            (Some(tc), None) => {
                for &a in tc.iter().rev() {
                    stack.push((a, s, level + 1));
                }
            }
            (None, Some(sc)) => {
                for &b in sc.iter().rev() {
                    stack.push((t, b, level + 1));
                }
            }
            (None, None) => part.nonadmissible.push(block),
        }
    }
    part
}
