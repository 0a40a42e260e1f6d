use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{GeometryError, PointCloud};
use crate::scalar::Real;

/// `n` quasi-uniform points on the ellipsoid `x₁² + x₂² + x₃²/9 = 1`:
/// a golden-angle sphere lattice (azimuth offset drawn from `seed`)
/// stretched by 3 along the third axis.
pub fn gen_ellipsoid_surface<T: Real>(n: usize, seed: u64) -> Result<PointCloud<T>, GeometryError> {
    if n == 0 {
        return Err(GeometryError::EmptyCloud);
    }
    let phase: f64 = ChaCha8Rng::seed_from_u64(seed).gen_range(0.0..std::f64::consts::TAU);
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let points = (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let th = phase + golden * i as f64;
            [T::lit(r * th.cos()), T::lit(r * th.sin()), T::lit(3.0 * z)]
        })
        .collect();
    PointCloud::new(points)
}

/// `n³` grid points filling `[−½, ½]³`.
pub fn gen_cube_grid<T: Real>(n: usize) -> Result<PointCloud<T>, GeometryError> {
    gen_cube_grid_scaled(n, 0.5)
}

/// `n³` grid points filling `[−h, h]³`.
pub fn gen_cube_grid_scaled<T: Real>(n: usize, half_width: f64) -> Result<PointCloud<T>, GeometryError> {
    if n < 2 {
        return Err(GeometryError::InvalidLeafSize);
    }
    let coord = |i: usize| T::lit(half_width * (2.0 * i as f64 / (n - 1) as f64 - 1.0));
    let mut points = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                points.push([coord(i), coord(j), coord(l)]);
            }
        }
    }
    PointCloud::new(points)
}
