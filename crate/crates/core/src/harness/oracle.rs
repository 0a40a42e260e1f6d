use rayon::prelude::*;

use crate::geometry::PointCloud;
use crate::h2::{check_len, H2Error, LinearOperator};
use crate::kernel::Kernel;
use crate::scalar::Real;

/// Largest size for which the dense reference product is computed.
pub const MAX_ORACLE_N: usize = 20000;

/// Dense kernel matrix applied entry by entry in parallel row stripes;
/// the matrix itself is never stored.
#[derive(Debug, Clone, Copy)]
pub struct DenseOracle<'a, T> {
    pub kernel: &'a Kernel<T>,
    pub rows: &'a PointCloud<T>,
    pub cols: &'a PointCloud<T>,
}

impl<'a, T: Real> DenseOracle<'a, T> {
    pub fn new(kernel: &'a Kernel<T>, rows: &'a PointCloud<T>, cols: &'a PointCloud<T>) -> Self {
        Self { kernel, rows, cols }
    }

    /// Applies the matrix to several vectors in one sweep over the entries.
    pub fn apply_many(&self, xs: &[Vec<T>]) -> Result<Vec<Vec<T>>, H2Error> {
        for x in xs {
            check_len(self.cols.len(), x.len())?;
        }
        let rows: Vec<Vec<T>> = (0..self.rows.len())
            .into_par_iter()
            .map(|i| {
                let mut acc = vec![T::zero(); xs.len()];
                for j in 0..self.cols.len() {
                    let a = self.kernel.entry(i, j, self.rows, self.cols);
                    for (s, x) in acc.iter_mut().zip(xs) {
                        *s += a * x[j];
                    }
                }
                acc
            })
            .collect();
        Ok((0..xs.len())
            .map(|v| rows.iter().map(|r| r[v]).collect())
            .collect())
    }
}

impl<T: Real> LinearOperator<T> for DenseOracle<'_, T> {
    fn nrows(&self) -> usize {
        self.rows.len()
    }

    fn ncols(&self) -> usize {
        self.cols.len()
    }

    fn matvec(&self, x: &[T]) -> Result<Vec<T>, H2Error> {
        Ok(self.apply_many(&[x.to_vec()])?.remove(0))
    }
}
