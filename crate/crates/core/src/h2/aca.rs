use std::ops::Range;

use crate::linalg::Matrix;
use crate::scalar::Real;

/// ACA stops after this many consecutive vanishing residual rows.
const MAX_ZERO_ROWS: usize = 3;

/// Low-rank block `A|_{ts} ≈ a bᵀ` over tree-order index ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankBlock<T> {
    pub row: usize,
    pub col: usize,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    /// `|t| × k`.
    pub a: Matrix<T>,
    /// `|s| × k`.
    pub b: Matrix<T>,
    pub converged: bool,
}

impl<T: Real> LowRankBlock<T> {
    pub fn rank(&self) -> usize {
        self.a.cols()
    }

    pub fn scalar_count(&self) -> usize {
        self.rank() * (self.rows.len() + self.cols.len())
    }

    pub fn to_dense(&self) -> Matrix<T> {
        self.a.matmul(&self.b.transpose()).expect("conforming factors")
    }

    /// `y_t += a (bᵀ x_s)` on tree-ordered vectors; returns the row-range contribution.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut tmp = vec![T::zero(); self.rank()];
        self.b.gemv_t_acc(&x[self.cols.clone()], &mut tmp);
        let mut y = vec![T::zero(); self.rows.len()];
        self.a.gemv_acc(&tmp, &mut y);
        y
    }
}

/// Dense near-field block over tree-order index ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseBlock<T> {
    pub row: usize,
    pub col: usize,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
    pub data: Matrix<T>,
}

impl<T: Real> DenseBlock<T> {
    pub fn scalar_count(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.rows.len()];
        self.data.gemv_acc(&x[self.cols.clone()], &mut y);
        y
    }
}

/// Result of [`aca_block`]: factors and whether the tolerance was met.
#[derive(Debug, Clone, PartialEq)]
pub struct AcaFactors<T> {
    /// `m × k`.
    pub a: Matrix<T>,
    /// `n × k`.
    pub b: Matrix<T>,
    pub converged: bool,
}

/// Adaptive cross approximation with partial pivoting of the `m × n` block
/// `entry(i, j)`.
///
/// The next row is the one with the largest entry of the latest column
/// vector; the column maximizes the current residual row. Stops when
/// `‖u_k‖ ‖v_k‖ ≤ eps ‖S_k‖_F` with the Frobenius norm of the approximant
/// updated incrementally, or at `k_max`.
pub fn aca_block<T: Real>(
    m: usize,
    n: usize,
    entry: impl Fn(usize, usize) -> T,
    eps: T,
    k_max: usize,
) -> AcaFactors<T> {
    let cap = k_max.min(m).min(n);
    let mut us: Vec<Vec<T>> = Vec::new();
    let mut vs: Vec<Vec<T>> = Vec::new();
    let mut used = vec![false; m];
    let mut norm_sq = T::zero();
    let mut zero_rows = 0;
    let mut next = Some(0usize);
    let mut converged = false;

    while let Some(i) = next {
        if us.len() >= cap {
            break;
        }
        used[i] = true;
        let mut row: Vec<T> = (0..n).map(|j| entry(i, j)).collect();
        for (u, v) in us.iter().zip(&vs) {
            let ui = u[i];
            if ui != T::zero() {
                row.iter_mut().zip(v).for_each(|(r, &vj)| *r -= ui * vj);
            }
        }
        let (j, pivot) = argmax_abs(&row);
        if pivot == T::zero() {
            zero_rows += 1;
            if zero_rows >= MAX_ZERO_ROWS {
                converged = true;
                break;
            }
            next = (0..m).find(|&r| !used[r]);
            continue;
        }
        zero_rows = 0;
        let p = row[j];
        let v: Vec<T> = row.iter().map(|&r| r / p).collect();
        let mut u: Vec<T> = (0..m).map(|r| entry(r, j)).collect();
        for (ul, vl) in us.iter().zip(&vs) {
            let vj = vl[j];
            if vj != T::zero() {
                u.iter_mut().zip(ul).for_each(|(a, &b)| *a -= vj * b);
            }
        }
        let uu = dot(&u, &u);
        let vv = dot(&v, &v);
        let mut cross = T::zero();
        for (ul, vl) in us.iter().zip(&vs) {
            cross += dot(&u, ul) * dot(&v, vl);
        }
        norm_sq += T::lit(2.0) * cross + uu * vv;
        next = (0..m)
            .filter(|&r| !used[r])
            .fold(None, |best: Option<(usize, T)>, r| match best {
                Some((_, b)) if b >= u[r].abs() => best,
                _ => Some((r, u[r].abs())),
            })
            .map(|(r, _)| r);
        us.push(u);
        vs.push(v);
        if (uu * vv).sqrt() <= eps * norm_sq.abs().sqrt() {
            converged = true;
            break;
        }
    }
    if next.is_none() && !converged {
        // every row consumed: the approximation reproduces the block rows exactly
        converged = true;
    }
    let k = us.len();
    let a = Matrix::from_fn(m, k, |r, l| us[l][r]);
    let b = Matrix::from_fn(n, k, |c, l| vs[l][c]);
    AcaFactors { a, b, converged }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn argmax_abs<T: Real>(xs: &[T]) -> (usize, T) {
    let mut best = (0, T::zero());
    for (i, &v) in xs.iter().enumerate() {
        if v.abs() > best.1 {
            best = (i, v.abs());
        }
    }
    best
}
