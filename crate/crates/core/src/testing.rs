//! Independent reference computations for tests.
//!
//! Shared between unit tests and the integration suites (which include this
//! file by path), so it only relies on `DenseMatrix` from the parent scope.

#![allow(dead_code, clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DenseMatrix;

/// Entries uniform in `[-1, 1]`.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..=1.0))
}

fn minor(a: &[Vec<f64>], skip_row: usize, skip_col: usize) -> Vec<Vec<f64>> {
    a.iter()
        .enumerate()
        .filter(|(i, _)| *i != skip_row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != skip_col)
                .map(|(_, &v)| v)
                .collect()
        })
        .collect()
}

fn laplace_det(a: &[Vec<f64>]) -> f64 {
    match a.len() {
        0 => 1.0,
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        n => (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[0][j] * laplace_det(&minor(a, 0, j))
            })
            .sum(),
    }
}

fn to_rows(a: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..a.rows()).map(|i| a.row(i).to_vec()).collect()
}

/// Determinant by Laplace expansion along the first row.
pub fn cofactor_det(a: &DenseMatrix) -> f64 {
    assert_eq!(a.rows(), a.cols());
    laplace_det(&to_rows(a))
}

/// Inverse from the adjugate: `A⁻¹ = adj(A) / det A`.
pub fn cofactor_inverse(a: &DenseMatrix) -> DenseMatrix {
    let rows = to_rows(a);
    let det = laplace_det(&rows);
    let n = rows.len();
    DenseMatrix::from_fn(n, n, |i, j| {
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        sign * laplace_det(&minor(&rows, j, i)) / det
    })
}

/// Number of eigenvalues of the symmetric matrix `a` below `shift`,
/// from the signs of the pivots of `a − shift·I` (Sylvester's law of inertia).
fn count_below(a: &DenseMatrix, shift: f64) -> usize {
    let n = a.rows();
    let mut m = to_rows(a);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= shift;
    }
    let mut negatives = 0;
    for k in 0..n {
        let mut pivot = m[k][k];
        if pivot == 0.0 {
            pivot = -1e-300;
        }
        if pivot < 0.0 {
            negatives += 1;
        }
        for i in k + 1..n {
            let f = m[i][k] / pivot;
            for j in k + 1..n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    negatives
}

/// Number of eigenvalues of the symmetric matrix `a` at or above `x`.
pub fn count_at_or_above(a: &DenseMatrix, x: f64) -> usize {
    a.rows() - count_below(a, x)
}

/// Largest eigenvalue of a symmetric matrix by bisection on the inertia count.
pub fn largest_eigenvalue_by_bisection(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let radius = (0..n)
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let (mut lo, mut hi) = (-radius - 1.0, radius + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(a, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * radius.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvalues of a symmetric matrix, descending, by bisection on the
/// inertia count of the characteristic matrix.
pub fn symmetric_eigenvalues_by_bisection(a: &DenseMatrix) -> Vec<f64> {
    let n = a.rows();
    let radius = (0..n)
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut out = Vec::with_capacity(n);
    // the j-th smallest eigenvalue is the smallest x with count_below(x) > j
    for j in 0..n {
        let (mut lo, mut hi) = (-radius - 1.0, radius + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count_below(a, mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * radius.max(1.0) {
                break;
            }
        }
        out.push(0.5 * (lo + hi));
    }
    out.reverse();
    out
}

/// Brute-force nearest-neighbour distance of every point.
pub fn nearest_neighbour_distances(points: &[[f64; 3]]) -> Vec<f64> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            points
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| dist(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Quasi-uniform points on the ellipsoid x² + y² + z²/9 = 1.
pub fn ellipsoid_points(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            [r * th.cos(), r * th.sin(), 3.0 * z]
        })
        .collect()
}
