use crate::scalar::Real;

use super::{LinalgError, Matrix};

/// Relative pivot threshold below which a factorization is declared singular.
pub const SINGULAR_RTOL: f64 = 1e-14;

/// Packed LU factorization `P A = L U` with unit lower `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct LuFactors<T> {
    lu: Matrix<T>,
    /// `perm[i]` is the original row placed at row `i` of `P A`.
    perm: Vec<usize>,
    sign: T,
    min_pivot: T,
}

impl<T: Real> LuFactors<T> {
    pub fn dim(&self) -> usize {
        self.lu.rows()
    }

    pub fn packed(&self) -> &Matrix<T> {
        &self.lu
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn sign(&self) -> T {
        self.sign
    }

    /// Smallest `|U_ii|`.
    pub fn min_pivot(&self) -> T {
        self.min_pivot
    }

    pub fn lower(&self) -> Matrix<T> {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lu[(i, j)],
            std::cmp::Ordering::Equal => T::one(),
            std::cmp::Ordering::Less => T::zero(),
        })
    }

    pub fn upper(&self) -> Matrix<T> {
        let n = self.dim();
        Matrix::from_fn(n, n, |i, j| if i <= j { self.lu[(i, j)] } else { T::zero() })
    }

    /// Solves `A X = B` (or `Aᵀ X = B` when `transposed`) for every column of `b`.
    pub fn solve(&self, b: &Matrix<T>, transposed: bool) -> Result<Matrix<T>, LinalgError> {
        lu_solve(self, b, transposed)
    }

    pub fn solve_vec(&self, b: &[T], transposed: bool) -> Result<Vec<T>, LinalgError> {
        let n = self.dim();
        if b.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: (n, 1),
                got: (b.len(), 1),
            });
        }
        let mut x = b.to_vec();
        if transposed {
            self.solve_transposed_in_place(&mut x);
        } else {
            self.solve_in_place(&mut x);
        }
        Ok(x)
    }

    fn solve_in_place(&self, x: &mut [T]) {
        let n = self.dim();
        let mut y: Vec<T> = self.perm.iter().map(|&p| x[p]).collect();
        for i in 0..n {
            let row = self.lu.row(i);
            let mut acc = y[i];
            for j in 0..i {
                acc -= row[j] * y[j];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let row = self.lu.row(i);
            let mut acc = y[i];
            for j in i + 1..n {
                acc -= row[j] * y[j];
            }
            y[i] = acc / row[i];
        }
        x.copy_from_slice(&y);
    }

    // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ z = b, Lᵀ w = z, then scatter x = Pᵀ w.
    fn solve_transposed_in_place(&self, x: &mut [T]) {
        let n = self.dim();
        let mut w = x.to_vec();
        for i in 0..n {
            let mut acc = w[i];
            for j in 0..i {
                acc -= self.lu[(j, i)] * w[j];
            }
            w[i] = acc / self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            let mut acc = w[i];
            for j in i + 1..n {
                acc -= self.lu[(j, i)] * w[j];
            }
            w[i] = acc;
        }
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
    }
}

/// Factorizes a square matrix with partial (row) pivoting.
pub fn lu_factor<T: Real>(a: &Matrix<T>) -> Result<LuFactors<T>, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let threshold = T::lit(SINGULAR_RTOL) * a.max_abs();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = T::one();
    let mut min_pivot = T::infinity();

    for k in 0..n {
        let mut p = k;
        let mut best = lu[(k, k)].abs();
        for i in k + 1..n {
            let v = lu[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best > threshold) {
            return Err(LinalgError::SingularMatrix {
                step: k,
                pivot: best.as_f64(),
            });
        }
        if p != k {
            lu.swap_rows(p, k);
            perm.swap(p, k);
            sign = -sign;
        }
        min_pivot = min_pivot.min(best);
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] / pivot;
            lu[(i, k)] = factor;
            if factor == T::zero() {
                continue;
            }
            for j in k + 1..n {
                let u = lu[(k, j)];
                lu[(i, j)] -= factor * u;
            }
        }
    }
    if n == 0 {
        min_pivot = T::zero();
    }
    Ok(LuFactors {
        lu,
        perm,
        sign,
        min_pivot,
    })
}

/// Solves with every column of `b` as a right-hand side.
pub fn lu_solve<T: Real>(
    f: &LuFactors<T>,
    b: &Matrix<T>,
    transposed: bool,
) -> Result<Matrix<T>, LinalgError> {
    let n = f.dim();
    if b.rows() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: (n, b.cols()),
            got: b.shape(),
        });
    }
    let mut out = Matrix::zeros(n, b.cols());
    let mut col = vec![T::zero(); n];
    for j in 0..b.cols() {
        for i in 0..n {
            col[i] = b[(i, j)];
        }
        if transposed {
            f.solve_transposed_in_place(&mut col);
        } else {
            f.solve_in_place(&mut col);
        }
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    Ok(out)
}

/// `det A = sign · ∏ U_ii`.
pub fn det_from_lu<T: Real>(f: &LuFactors<T>) -> T {
    (0..f.dim()).fold(f.sign, |d, i| d * f.lu[(i, i)])
}
