//! Power-law kernels `K(x, y) = ξ(x) ζ(y) · c · |x − y|^(−α)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{distance, Point, PointCloud};
use crate::scalar::Real;

/// Distances below this are treated as coincident points.
pub const COINCIDENT_DIST: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("kernel evaluated at coincident points (|x - y| = {0:e})")]
    Singularity(f64),
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(String),
}

/// A function of two points. Everything that approximates kernel
/// restrictions (cross approximation, Chebyshev reference) is generic over it.
pub trait PairKernel<T>: Sync {
    fn eval(&self, x: &Point<T>, y: &Point<T>) -> T;

    /// Upper bound of `|∇_y f(x, y)|` over pairs with `|x − y| ≥ r`, if known.
    fn gradient_bound(&self, _r: T) -> Option<T> {
        None
    }
}

impl<T, K: PairKernel<T> + ?Sized> PairKernel<T> for &K {
    #[inline]
    fn eval(&self, x: &Point<T>, y: &Point<T>) -> T {
        (**self).eval(x, y)
    }

    fn gradient_bound(&self, r: T) -> Option<T> {
        (**self).gradient_bound(r)
    }
}

/// Adapts a closure to [`PairKernel`].
#[derive(Debug, Clone, Copy)]
pub struct FnKernel<F>(pub F);

impl<T, F> PairKernel<T> for FnKernel<F>
where
    F: Fn(&Point<T>, &Point<T>) -> T + Sync,
{
    #[inline]
    fn eval(&self, x: &Point<T>, y: &Point<T>) -> T {
        (self.0)(x, y)
    }
}

/// Swaps the arguments, turning a row-side kernel into a column-side one.
#[derive(Debug, Clone, Copy)]
pub struct Transposed<K>(pub K);

impl<T, K: PairKernel<T>> PairKernel<T> for Transposed<K> {
    #[inline]
    fn eval(&self, x: &Point<T>, y: &Point<T>) -> T {
        self.0.eval(y, x)
    }

    fn gradient_bound(&self, r: T) -> Option<T> {
        self.0.gradient_bound(r)
    }
}

/// Power-law kernel with per-point weight tables.
///
/// Empty weight tables mean `ξ ≡ 1` / `ζ ≡ 1`. Matrix entries at coincident
/// row and column points take the configured `diagonal` value.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel<T> {
    alpha: T,
    scale: T,
    xi: Vec<T>,
    zeta: Vec<T>,
    diagonal: T,
}

impl<T: Real> Kernel<T> {
    pub fn power(alpha: T, scale: T) -> Result<Self, KernelError> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(KernelError::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
        }
        if !scale.is_finite() {
            return Err(KernelError::InvalidParameter("scale must be finite".into()));
        }
        Ok(Self {
            alpha,
            scale,
            xi: Vec::new(),
            zeta: Vec::new(),
            diagonal: T::zero(),
        })
    }

    /// Single-layer Laplace kernel `1 / (4π |x − y|)`.
    pub fn newton() -> Self {
        Self::power(T::one(), T::lit(1.0 / (4.0 * std::f64::consts::PI))).expect("valid")
    }

    /// Fractional Laplacian kernel of order `s` in `d` dimensions:
    /// exponent `d + 2s`, prefactor `c_{d,s}`.
    pub fn fractional(d: u32, s: T) -> Result<Self, KernelError> {
        if !(s > T::zero() && s < T::one()) {
            return Err(KernelError::InvalidParameter(format!("order s must lie in (0,1), got {s}")));
        }
        let alpha = T::lit(d as f64) + T::lit(2.0) * s;
        Self::power(alpha, T::lit(fractional_constant(d, s.as_f64())))
    }

    pub fn with_row_weights(mut self, xi: Vec<T>) -> Result<Self, KernelError> {
        if xi.iter().any(|w| !w.is_finite()) {
            return Err(KernelError::InvalidParameter("row weights must be finite".into()));
        }
        self.xi = xi;
        Ok(self)
    }

    pub fn with_col_weights(mut self, zeta: Vec<T>) -> Result<Self, KernelError> {
        if zeta.iter().any(|w| !w.is_finite()) {
            return Err(KernelError::InvalidParameter("column weights must be finite".into()));
        }
        self.zeta = zeta;
        Ok(self)
    }

    pub fn with_diagonal(mut self, diagonal: T) -> Self {
        self.diagonal = diagonal;
        self
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn diagonal(&self) -> T {
        self.diagonal
    }

    #[inline]
    pub fn row_weight(&self, i: usize) -> T {
        self.xi.get(i).copied().unwrap_or_else(T::one)
    }

    #[inline]
    pub fn col_weight(&self, j: usize) -> T {
        self.zeta.get(j).copied().unwrap_or_else(T::one)
    }

    /// `‖ξ‖_∞` (one for the implicit unit table).
    pub fn max_row_weight(&self) -> T {
        max_abs_or_one(&self.xi)
    }

    pub fn max_col_weight(&self) -> T {
        max_abs_or_one(&self.zeta)
    }

    /// `c · |x − y|^(−α)`, failing at coincident points.
    pub fn try_eval(&self, x: &Point<T>, y: &Point<T>) -> Result<T, KernelError> {
        let r = distance(x, y);
        if r < T::lit(COINCIDENT_DIST) {
            return Err(KernelError::Singularity(r.as_f64()));
        }
        Ok(self.radial(r))
    }

    #[inline]
    fn radial(&self, r: T) -> T {
        if self.alpha == T::one() {
            self.scale / r
        } else {
            self.scale * r.powf(-self.alpha)
        }
    }

    /// Matrix entry `a_ij = ξ_i ζ_j f(x_i, y_j)`; coincident points give the
    /// diagonal value.
    #[inline]
    pub fn entry(&self, i: usize, j: usize, rows: &PointCloud<T>, cols: &PointCloud<T>) -> T {
        let r = distance(rows.point(i), cols.point(j));
        if r < T::lit(COINCIDENT_DIST) {
            return self.diagonal;
        }
        self.row_weight(i) * self.col_weight(j) * self.radial(r)
    }
}

impl<T: Real> PairKernel<T> for Kernel<T> {
    /// Unchecked evaluation; returns infinity at coincident points.
    #[inline]
    fn eval(&self, x: &Point<T>, y: &Point<T>) -> T {
        self.radial(distance(x, y))
    }

    fn gradient_bound(&self, r: T) -> Option<T> {
        (r > T::zero()).then(|| self.scale.abs() * self.alpha * r.powf(-self.alpha - T::one()))
    }
}

fn max_abs_or_one<T: Real>(w: &[T]) -> T {
    if w.is_empty() {
        return T::one();
    }
    w.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

/// `c_{d,s} = 2^{2s} Γ(s + d/2) / (π^{d/2} Γ(1 − s))`.
pub fn fractional_constant(d: u32, s: f64) -> f64 {
    let d = d as f64;
    2f64.powf(2.0 * s) * libm::tgamma(s + 0.5 * d)
        / (std::f64::consts::PI.powf(0.5 * d) * libm::tgamma(1.0 - s))
}

/// Kernel description as it appears in experiment configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelSpec {
    Power {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    Fractional {
        d: u32,
        s: f64,
    },
    /// `1 / (4π |x − y|)`.
    Newton,
}

fn one() -> f64 {
    1.0
}

impl KernelSpec {
    pub fn build<T: Real>(&self) -> Result<Kernel<T>, KernelError> {
        match *self {
            KernelSpec::Power { alpha, scale } => Kernel::power(T::lit(alpha), T::lit(scale)),
            KernelSpec::Fractional { d, s } => Kernel::fractional(d, T::lit(s)),
            KernelSpec::Newton => Ok(Kernel::newton()),
        }
    }
}
