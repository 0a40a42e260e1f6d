use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Real;

use super::{LinalgError, Matrix};

/// Singular values in descending order, by one-sided (Hestenes) Jacobi.
///
/// Intended for small blocks used as reference baselines; cost is
/// `O(sweeps · m · n²)`.
pub fn singular_values<T: Real>(a: &Matrix<T>) -> Vec<T> {
    let work = if a.rows() >= a.cols() {
        a.transpose()
    } else {
        a.clone()
    };
    // Rows of `work` are the columns being orthogonalised.
    let n = work.rows();
    let len = work.cols();
    let mut cols: Vec<Vec<T>> = (0..n).map(|i| work.row(i).to_vec()).collect();
    let tol = T::epsilon() * T::lit(10.0);

    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (T::zero(), T::zero(), T::zero());
                for k in 0..len {
                    let (x, y) = (cols[p][k], cols[q][k]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == T::zero() || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (left, right) = cols.split_at_mut(q);
                let (cp, cq) = (&mut left[p], &mut right[0]);
                for k in 0..len {
                    let (x, y) = (cp[k], cq[k]);
                    cp[k] = c * x - s * y;
                    cq[k] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut sv: Vec<T> = cols
        .iter()
        .map(|c| c.iter().map(|&v| v * v).sum::<T>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Best rank-`k` approximation error in the spectral norm, `σ_{k+1}`.
pub fn svd_rank_error<T: Real>(a: &Matrix<T>, k: usize) -> Result<T, LinalgError> {
    let bound = a.rows().min(a.cols());
    if k >= bound {
        return Err(LinalgError::RankOutOfRange { k, bound });
    }
    Ok(singular_values(a)[k])
}

/// Randomized power-iteration estimate of `‖A‖₂`.
pub fn norm2_estimate<T: Real>(a: &Matrix<T>, iterations: usize, seed: u64) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<T> = (0..a.cols())
        .map(|_| T::lit(rng.gen_range(-1.0..1.0)))
        .collect();
    let mut estimate = T::zero();
    for _ in 0..iterations.max(1) {
        let nx = x.iter().map(|&v| v * v).sum::<T>().sqrt();
        if nx == T::zero() {
            return T::zero();
        }
        x.iter_mut().for_each(|v| *v /= nx);
        let y = a.matvec(&x);
        estimate = y.iter().map(|&v| v * v).sum::<T>().sqrt();
        let mut z = vec![T::zero(); a.cols()];
        a.gemv_t_acc(&y, &mut z);
        x = z;
    }
    estimate
}
