use serde::{Deserialize, Serialize};

/// Stored scalar counts of the compressed formats against the dense matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StorageReport {
    pub n_rows: usize,
    pub n_cols: usize,
    pub dense_units: usize,
    pub h_units: usize,
    pub h2_units: usize,
    pub compression_h: f64,
    pub compression_h2: f64,
    /// Break-down of `h2_units`.
    pub h2_basis_units: usize,
    pub h2_coupling_units: usize,
    /// Scalars in low-rank (ACA) blocks of the format.
    pub lowrank_units: usize,
    /// Scalars in dense near-field blocks of the format.
    pub nearfield_units: usize,
}

impl StorageReport {
    fn base(n: usize, m: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: m,
            dense_units: n * m,
            ..Self::default()
        }
    }

    fn ratio(&self, units: usize) -> f64 {
        units as f64 / self.dense_units as f64
    }

    pub fn for_dense(n: usize, m: usize) -> Self {
        let mut r = Self::base(n, m);
        r.nearfield_units = n * m;
        r.h_units = n * m;
        r.h2_units = n * m;
        r.compression_h = 1.0;
        r.compression_h2 = 1.0;
        r
    }

    pub fn for_h(n: usize, m: usize, lowrank: usize, dense: usize) -> Self {
        let mut r = Self::base(n, m);
        r.lowrank_units = lowrank;
        r.nearfield_units = dense;
        r.h_units = lowrank + dense;
        r.compression_h = r.ratio(r.h_units);
        r
    }

    pub fn for_h2(n: usize, m: usize, basis: usize, coupling: usize, lowrank: usize, dense: usize) -> Self {
        let mut r = Self::base(n, m);
        r.h2_basis_units = basis;
        r.h2_coupling_units = coupling;
        r.lowrank_units = lowrank;
        r.nearfield_units = dense;
        r.h2_units = basis + coupling + lowrank + dense;
        r.compression_h2 = r.ratio(r.h2_units);
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios() {
        assert_eq!(StorageReport::for_dense(7, 7).compression_h, 1.0);
        // one rank-1 block over the whole matrix
        let r = StorageReport::for_h(100, 100, 200, 0);
        assert_eq!(r.compression_h, 2.0 / 100.0);
        let r = StorageReport::for_h2(10, 10, 20, 1, 0, 30);
        assert_eq!(r.h2_units, 51);
        assert_eq!(r.compression_h2, 0.51);
    }
}
