//! Binary container for assembled H²-matrices. All integers are `u64` and
//! all reals `f64`, little-endian; the layout is documented in the README.

use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::geometry::{BBox, Cluster, ClusterTree, Point};
use crate::linalg::Matrix;
use crate::scalar::Real;

use super::aca::{DenseBlock, LowRankBlock};
use super::basis::{BasisMode, BasisNode, ClusterBasisSet};
use super::matrix::{CouplingBlock, H2Matrix};
use super::H2Error;

pub const FORMAT_MAGIC: [u8; 8] = *b"H2ACAOP\0";
pub const FORMAT_VERSION: u32 = 1;

const NONE: u64 = u64::MAX;

/// Serializes `h2`; construction records (cross bases) are not stored.
pub fn write_h2<T: Real, W: Write>(h2: &H2Matrix<T>, w: &mut W) -> Result<(), H2Error> {
    w.write_all(&FORMAT_MAGIC)?;
    w.write_u32::<LE>(FORMAT_VERSION)?;
    w.write_u64::<LE>(h2.row_tree.num_indices() as u64)?;
    w.write_u64::<LE>(h2.col_tree.num_indices() as u64)?;
    w.write_f64::<LE>(h2.eps.as_f64())?;
    w.write_f64::<LE>(h2.eta.as_f64())?;
    w.write_u8(match h2.row_basis.mode {
        BasisMode::Nested => 0,
        BasisMode::Uniform => 1,
    })?;
    write_tree(w, &h2.row_tree)?;
    write_tree(w, &h2.col_tree)?;
    write_basis(w, &h2.row_basis)?;
    write_basis(w, &h2.col_basis)?;

    w.write_u64::<LE>(h2.couplings.len() as u64)?;
    for b in &h2.couplings {
        w.write_u64::<LE>(b.row as u64)?;
        w.write_u64::<LE>(b.col as u64)?;
        w.write_u64::<LE>(b.level as u64)?;
        write_matrix(w, &b.f)?;
    }
    w.write_u64::<LE>(h2.aca_blocks.len() as u64)?;
    for b in &h2.aca_blocks {
        w.write_u64::<LE>(b.row as u64)?;
        w.write_u64::<LE>(b.col as u64)?;
        w.write_u8(b.converged as u8)?;
        write_matrix(w, &b.a)?;
        write_matrix(w, &b.b)?;
    }
    w.write_u64::<LE>(h2.nearfield.len() as u64)?;
    for b in &h2.nearfield {
        w.write_u64::<LE>(b.row as u64)?;
        w.write_u64::<LE>(b.col as u64)?;
        write_matrix(w, &b.data)?;
    }
    Ok(())
}

pub fn read_h2<T: Real, R: Read>(r: &mut R) -> Result<H2Matrix<T>, H2Error> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != FORMAT_MAGIC {
        return Err(H2Error::Format("bad magic".into()));
    }
    let version = r.read_u32::<LE>()?;
    if version != FORMAT_VERSION {
        return Err(H2Error::Format(format!("unsupported version {version}")));
    }
    let n = read_usize(r)?;
    let m = read_usize(r)?;
    let eps = T::lit(r.read_f64::<LE>()?);
    let eta = T::lit(r.read_f64::<LE>()?);
    let mode = match r.read_u8()? {
        0 => BasisMode::Nested,
        1 => BasisMode::Uniform,
        x => return Err(H2Error::Format(format!("unknown basis mode {x}"))),
    };
    let row_tree = read_tree(r)?;
    let col_tree = read_tree(r)?;
    if row_tree.num_indices() != n || col_tree.num_indices() != m {
        return Err(H2Error::Format("tree sizes disagree with header".into()));
    }
    let row_basis = read_basis(r, mode, row_tree.len())?;
    let col_basis = read_basis(r, mode, col_tree.len())?;

    let cluster = |tree: &ClusterTree<T>, id: usize| -> Result<std::ops::Range<usize>, H2Error> {
        if id >= tree.len() {
            return Err(H2Error::Format(format!("cluster id {id} out of range")));
        }
        Ok(tree.cluster(id).range())
    };
    let count = read_usize(r)?;
    let mut couplings = Vec::new();
    for _ in 0..count {
        let (row, col, level) = (read_usize(r)?, read_usize(r)?, read_usize(r)?);
        couplings.push(CouplingBlock {
            row,
            col,
            rows: cluster(&row_tree, row)?,
            cols: cluster(&col_tree, col)?,
            level,
            f: read_matrix(r)?,
        });
    }
    let count = read_usize(r)?;
    let mut aca_blocks = Vec::new();
    for _ in 0..count {
        let (row, col) = (read_usize(r)?, read_usize(r)?);
        let converged = r.read_u8()? != 0;
        aca_blocks.push(LowRankBlock {
            row,
            col,
            rows: cluster(&row_tree, row)?,
            cols: cluster(&col_tree, col)?,
            a: read_matrix(r)?,
            b: read_matrix(r)?,
            converged,
        });
    }
    let count = read_usize(r)?;
    let mut nearfield = Vec::new();
    for _ in 0..count {
        let (row, col) = (read_usize(r)?, read_usize(r)?);
        nearfield.push(DenseBlock {
            row,
            col,
            rows: cluster(&row_tree, row)?,
            cols: cluster(&col_tree, col)?,
            data: read_matrix(r)?,
        });
    }
    Ok(H2Matrix {
        row_tree,
        col_tree,
        row_basis,
        col_basis,
        couplings,
        aca_blocks,
        nearfield,
        eps,
        eta,
    })
}

impl<T: Real> H2Matrix<T> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_h2(self, &mut out).expect("writing to memory");
        out
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self, H2Error> {
        let h2 = read_h2(&mut bytes)?;
        if !bytes.is_empty() {
            return Err(H2Error::Format(format!("{} trailing bytes", bytes.len())));
        }
        Ok(h2)
    }
}

fn read_usize<R: Read>(r: &mut R) -> Result<usize, H2Error> {
    let v = r.read_u64::<LE>()?;
    usize::try_from(v).map_err(|_| H2Error::Format(format!("count {v} too large")))
}

fn read_opt<R: Read>(r: &mut R) -> Result<Option<usize>, H2Error> {
    let v = r.read_u64::<LE>()?;
    if v == NONE {
        Ok(None)
    } else {
        usize::try_from(v)
            .map(Some)
            .map_err(|_| H2Error::Format(format!("index {v} too large")))
    }
}

fn write_point<T: Real, W: Write>(w: &mut W, p: &Point<T>) -> Result<(), H2Error> {
    for v in p {
        w.write_f64::<LE>(v.as_f64())?;
    }
    Ok(())
}

fn read_point<T: Real, R: Read>(r: &mut R) -> Result<Point<T>, H2Error> {
    Ok([
        T::lit(r.read_f64::<LE>()?),
        T::lit(r.read_f64::<LE>()?),
        T::lit(r.read_f64::<LE>()?),
    ])
}

fn write_matrix<T: Real, W: Write>(w: &mut W, m: &Matrix<T>) -> Result<(), H2Error> {
    w.write_u64::<LE>(m.rows() as u64)?;
    w.write_u64::<LE>(m.cols() as u64)?;
    for v in m.data() {
        w.write_f64::<LE>(v.as_f64())?;
    }
    Ok(())
}

fn read_matrix<T: Real, R: Read>(r: &mut R) -> Result<Matrix<T>, H2Error> {
    let rows = read_usize(r)?;
    let cols = read_usize(r)?;
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| H2Error::Format("matrix size overflow".into()))?;
    let mut data = Vec::with_capacity(len.min(1 << 24));
    for _ in 0..len {
        data.push(T::lit(r.read_f64::<LE>()?));
    }
    Ok(Matrix::from_vec(rows, cols, data)?)
}

fn write_tree<T: Real, W: Write>(w: &mut W, tree: &ClusterTree<T>) -> Result<(), H2Error> {
    w.write_u64::<LE>(tree.num_indices() as u64)?;
    for &p in tree.perm() {
        w.write_u64::<LE>(p as u64)?;
    }
    w.write_u64::<LE>(tree.len() as u64)?;
    for c in tree.clusters() {
        w.write_u64::<LE>(c.start as u64)?;
        w.write_u64::<LE>(c.end as u64)?;
        write_point(w, &c.bbox.lo)?;
        write_point(w, &c.bbox.hi)?;
        w.write_u64::<LE>(c.parent.map_or(NONE, |p| p as u64))?;
        let [a, b] = c.children.map_or([NONE; 2], |ch| ch.map(|x| x as u64));
        w.write_u64::<LE>(a)?;
        w.write_u64::<LE>(b)?;
        w.write_u64::<LE>(c.level as u64)?;
    }
    Ok(())
}

fn read_tree<T: Real, R: Read>(r: &mut R) -> Result<ClusterTree<T>, H2Error> {
    let n = read_usize(r)?;
    let mut perm = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        perm.push(read_usize(r)?);
    }
    let count = read_usize(r)?;
    let mut clusters = Vec::with_capacity(count.min(1 << 20));
    for id in 0..count {
        let start = read_usize(r)?;
        let end = read_usize(r)?;
        let bbox = BBox::new(read_point(r)?, read_point(r)?);
        let parent = read_opt(r)?;
        let children = match (read_opt(r)?, read_opt(r)?) {
            (Some(a), Some(b)) => Some([a, b]),
            (None, None) => None,
            _ => return Err(H2Error::Format(format!("cluster {id} has one child"))),
        };
        let level = read_usize(r)?;
        clusters.push(Cluster {
            id,
            start,
            end,
            bbox,
            children,
            parent,
            level,
        });
    }
    ClusterTree::from_parts(clusters, perm).map_err(|e| H2Error::Format(e.to_string()))
}

fn write_basis<T: Real, W: Write>(w: &mut W, basis: &ClusterBasisSet<T>) -> Result<(), H2Error> {
    w.write_u64::<LE>(basis.len() as u64)?;
    for node in basis.nodes() {
        w.write_u64::<LE>(node.cluster as u64)?;
        w.write_u64::<LE>(node.rank() as u64)?;
        for (&p, pt) in node.pivots.iter().zip(&node.pivot_points) {
            w.write_u64::<LE>(p as u64)?;
            write_point(w, pt)?;
        }
        for m in [&node.leaf, &node.transfer] {
            match m {
                Some(m) => {
                    w.write_u8(1)?;
                    write_matrix(w, m)?;
                }
                None => w.write_u8(0)?,
            }
        }
    }
    Ok(())
}

fn read_basis<T: Real, R: Read>(r: &mut R, mode: BasisMode, clusters: usize) -> Result<ClusterBasisSet<T>, H2Error> {
    let count = read_usize(r)?;
    let mut nodes: Vec<Option<BasisNode<T>>> = vec![None; clusters];
    for _ in 0..count {
        let cluster = read_usize(r)?;
        if cluster >= clusters {
            return Err(H2Error::Format(format!("basis for unknown cluster {cluster}")));
        }
        let rank = read_usize(r)?;
        let mut pivots = Vec::with_capacity(rank.min(1 << 16));
        let mut pivot_points = Vec::with_capacity(rank.min(1 << 16));
        for _ in 0..rank {
            pivots.push(read_usize(r)?);
            pivot_points.push(read_point(r)?);
        }
        let mut mats = [None, None];
        for slot in &mut mats {
            *slot = match r.read_u8()? {
                0 => None,
                1 => Some(read_matrix(r)?),
                x => return Err(H2Error::Format(format!("bad presence flag {x}"))),
            };
        }
        let [leaf, transfer] = mats;
        nodes[cluster] = Some(BasisNode {
            cluster,
            pivots,
            pivot_points,
            leaf,
            transfer,
            cross: None,
        });
    }
    Ok(ClusterBasisSet::from_nodes(mode, nodes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_block_partition, build_cluster_tree, PointCloud};
    use crate::h2::{assemble_h2, H2Options, LinearOperator};
    use crate::kernel::Kernel;
    use crate::testing::ellipsoid_points;

    #[test]
    fn round_trip_is_bit_exact() {
        let pc = PointCloud::new(ellipsoid_points(900)).unwrap();
        let tree = build_cluster_tree(&pc, 20).unwrap();
        let part = build_block_partition(&tree, &tree, 0.8, 20);
        let mut opts = H2Options::new(1e-5);
        opts.n_min_h2 = 40;
        let h2 = assemble_h2(&Kernel::newton(), &pc, &pc, &tree, &tree, &part, &opts).unwrap();
        assert!(!h2.couplings().is_empty());
        let bytes = h2.to_bytes();
        let back: H2Matrix<f64> = H2Matrix::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        let x: Vec<f64> = (0..900).map(|i| (i as f64).sqrt()).collect();
        let (a, b) = (h2.matvec(&x).unwrap(), back.matvec(&x).unwrap());
        assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));
        assert_eq!(back.storage(), h2.storage());

        assert!(H2Matrix::<f64>::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(H2Matrix::<f64>::from_bytes(&bad), Err(H2Error::Format(_))));
    }
}
