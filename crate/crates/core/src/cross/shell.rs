use crate::geometry::{distance, BBox, Point};
use crate::scalar::Real;

use super::CrossError;

/// Sampled sphere enclosing a cluster; its samples are the candidate far
/// pivots and the set on which the residual is monitored.
#[derive(Debug, Clone, PartialEq)]
pub struct FarShell<T> {
    pub center: Point<T>,
    pub radius: T,
    pub samples: Vec<Point<T>>,
    /// Half of the largest nearest-neighbour gap between samples.
    pub delta: T,
}

impl<T: Real> FarShell<T> {
    /// Fibonacci-lattice sphere with explicit center and radius.
    pub fn sphere(center: Point<T>, radius: T, m: usize) -> Result<Self, CrossError> {
        if m < 8 {
            return Err(CrossError::TooFewSamples(m));
        }
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(CrossError::InvalidParameter(format!("shell radius {radius}")));
        }
        let samples = fibonacci_sphere(center, radius, m);
        let delta = half_max_gap(&samples);
        Ok(Self {
            center,
            radius,
            samples,
            delta,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Shell around a cluster box: centered at the box center with radius
/// `ρ (1 + 2/η)`, `ρ` the half diagonal.
pub fn make_far_shell<T: Real>(bbox: &BBox<T>, eta: T, m: usize) -> Result<FarShell<T>, CrossError> {
    if !(eta > T::zero()) {
        return Err(CrossError::InvalidParameter(format!("eta must be > 0, got {eta}")));
    }
    let rho = T::lit(0.5) * bbox.diameter();
    let c = bbox.center();
    let magnitude = c.iter().fold(T::one(), |a, v| a.max(v.abs()));
    if rho <= T::lit(1e-12) * magnitude {
        return Err(CrossError::DegenerateBox);
    }
    FarShell::sphere(c, shell_radius(rho, eta), m)
}

#[inline]
pub fn shell_radius<T: Real>(rho: T, eta: T) -> T {
    rho * (T::one() + T::lit(2.0) / eta)
}

/// `m` quasi-uniform points on a sphere (golden-angle spiral).
pub fn fibonacci_sphere<T: Real>(center: Point<T>, radius: T, m: usize) -> Vec<Point<T>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..m)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / m as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let theta = golden * i as f64;
            [
                center[0] + radius * T::lit(r * theta.cos()),
                center[1] + radius * T::lit(r * theta.sin()),
                center[2] + radius * T::lit(z),
            ]
        })
        .collect()
}

fn half_max_gap<T: Real>(samples: &[Point<T>]) -> T {
    let mut worst = T::zero();
    for (i, p) in samples.iter().enumerate() {
        let mut nearest = T::infinity();
        for (j, q) in samples.iter().enumerate() {
            if i != j {
                nearest = nearest.min(distance(p, q));
            }
        }
        worst = worst.max(nearest);
    }
    T::lit(0.5) * worst
}

/// `q = (2^{1/d} − 1)^{-1} + 2`, the ball-ratio constant of the shell bound.
pub fn shell_bound_constant(d: u32) -> f64 {
    1.0 / (2f64.powf(1.0 / d as f64) - 1.0) + 2.0
}
