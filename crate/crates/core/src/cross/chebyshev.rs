use crate::geometry::{BBox, Point};
use crate::kernel::PairKernel;
use crate::linalg::Matrix;
use crate::scalar::Real;

use super::CrossError;

/// First-kind Chebyshev nodes on `[lo, hi]`.
pub fn chebyshev_nodes<T: Real>(n: usize, lo: T, hi: T) -> Vec<T> {
    let mid = T::lit(0.5) * (lo + hi);
    let half = T::lit(0.5) * (hi - lo);
    (0..n)
        .map(|j| {
            let t = ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
            mid + half * T::lit(t)
        })
        .collect()
}

/// Tensor-product Chebyshev interpolation in the first kernel argument over
/// a box, `n` nodes per axis (`n³` nodes in total).
#[derive(Debug, Clone)]
pub struct ChebyshevInterpolant<T> {
    n: usize,
    axes: [Vec<T>; 3],
    weights: Vec<T>,
}

impl<T: Real> ChebyshevInterpolant<T> {
    pub fn new(bbox: &BBox<T>, n: usize) -> Result<Self, CrossError> {
        if n == 0 {
            return Err(CrossError::InvalidParameter("Chebyshev degree must be >= 1".into()));
        }
        let axes = [0, 1, 2].map(|a| chebyshev_nodes(n, bbox.lo[a], bbox.hi[a]));
        // barycentric weights of first-kind nodes
        let weights = (0..n)
            .map(|j| {
                let s = ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).sin();
                T::lit(if j % 2 == 0 { s } else { -s })
            })
            .collect();
        Ok(Self { n, axes, weights })
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node `(i, j, l)` flattened with the first axis slowest.
    pub fn nodes(&self) -> Vec<Point<T>> {
        let n = self.n;
        let mut out = Vec::with_capacity(self.len());
        for i in 0..n {
            for j in 0..n {
                for l in 0..n {
                    out.push([self.axes[0][i], self.axes[1][j], self.axes[2][l]]);
                }
            }
        }
        out
    }

    fn axis_basis(&self, axis: usize, x: T) -> Vec<T> {
        let nodes = &self.axes[axis];
        if let Some(hit) = nodes.iter().position(|&t| t == x) {
            let mut e = vec![T::zero(); self.n];
            e[hit] = T::one();
            return e;
        }
        let terms: Vec<T> = nodes.iter().zip(&self.weights).map(|(&t, &w)| w / (x - t)).collect();
        let total: T = terms.iter().copied().sum();
        terms.into_iter().map(|v| v / total).collect()
    }

    /// Values of all `n³` tensor Lagrange polynomials at `x`.
    pub fn basis_at(&self, x: &Point<T>) -> Vec<T> {
        let [bx, by, bz] = [0, 1, 2].map(|a| self.axis_basis(a, x[a]));
        let mut out = Vec::with_capacity(self.len());
        for &a in &bx {
            for &b in &by {
                for &c in &bz {
                    out.push(a * b * c);
                }
            }
        }
        out
    }
}

/// Max over cluster points × test points of `|f(x,y) − Σ_i P_i(x) f(ξ_i,y)|`
/// for tensor Chebyshev interpolation with `n` nodes per axis.
pub fn chebyshev_reference<T: Real, K: PairKernel<T>>(
    bbox: &BBox<T>,
    kernel: &K,
    n: usize,
    points: &[Point<T>],
    test_points: &[Point<T>],
) -> Result<T, CrossError> {
    let interp = ChebyshevInterpolant::new(bbox, n)?;
    let nodes = interp.nodes();
    let k = nodes.len();
    let mut p = Matrix::zeros(points.len(), k);
    for (i, x) in points.iter().enumerate() {
        p.row_mut(i).copy_from_slice(&interp.basis_at(x));
    }
    let f_nodes = Matrix::from_fn(nodes.len(), test_points.len(), |i, q| kernel.eval(&nodes[i], &test_points[q]));
    let approx = p.matmul(&f_nodes)?;
    let mut err = T::zero();
    for (i, x) in points.iter().enumerate() {
        for (q, y) in test_points.iter().enumerate() {
            err = err.max((kernel.eval(x, y) - approx[(i, q)]).abs());
        }
    }
    Ok(err)
}
