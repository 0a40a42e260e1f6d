use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cross::{
    chebyshev_reference, cross_approximate_with, fibonacci_sphere, lebesgue_prefix, residual_curve, FarShell,
    RowPivot,
};
use crate::geometry::BBox;
use crate::kernel::KernelSpec;

use super::bounds::{check_shell_bound, ShellBoundCheck};
use super::generators::gen_cube_grid_scaled;
use super::run::RunError;

/// Cube grid inside a sampled sphere: cross approximation against tensor
/// Chebyshev interpolation at matching numbers of terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Options {
    /// Grid points per axis.
    pub grid_n: usize,
    pub half_width: f64,
    pub shell_radius: f64,
    pub shell_samples: usize,
    /// Test points per shell sample.
    pub test_factor: usize,
    pub ks: Vec<usize>,
    pub kernel: KernelSpec,
    pub row_pivot: RowPivot,
}

impl Default for Table1Options {
    fn default() -> Self {
        Self {
            grid_n: 10,
            half_width: 0.5,
            shell_radius: 3.0,
            shell_samples: 768,
            test_factor: 3,
            ks: vec![1, 8, 27, 64, 125],
            kernel: KernelSpec::Power { alpha: 1.0, scale: 1.0 },
            row_pivot: RowPivot::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub k: usize,
    /// Max error over grid points × test points.
    pub cross_error: f64,
    /// Max residual over grid points × shell samples.
    pub cross_error_on_shell: f64,
    pub lebesgue: f64,
    /// Present when `k` is a perfect cube.
    pub chebyshev_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Report {
    pub options: Table1Options,
    pub n_points: usize,
    pub test_points: usize,
    pub rank_reached: usize,
    pub rows: Vec<Table1Row>,
    /// Test-shell residual against twice the sample-shell residual, all steps.
    pub shell_bound: ShellBoundCheck,
    pub seconds: f64,
}

impl Table1Report {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:>5}  {:>12}  {:>12}  {:>10}\n",
            "k", "cross", "chebyshev", "lebesgue"
        );
        for r in &self.rows {
            let cheb = r.chebyshev_error.map_or("-".to_string(), |c| format!("{c:.3e}"));
            out.push_str(&format!(
                "{:>5}  {:>12.3e}  {:>12}  {:>10.2}\n",
                r.k, r.cross_error, cheb, r.lebesgue
            ));
        }
        out
    }
}

fn cube_root(k: usize) -> Option<usize> {
    (1..=k).take_while(|n| n * n * n <= k).find(|n| n * n * n == k)
}

pub fn table1_experiment(opts: &Table1Options) -> Result<Table1Report, RunError> {
    let start = Instant::now();
    let pc = gen_cube_grid_scaled::<f64>(opts.grid_n, opts.half_width)?;
    let kernel = opts.kernel.build::<f64>()?;
    let center = [0.0; 3];
    let shell = FarShell::sphere(center, opts.shell_radius, opts.shell_samples)?;
    let test = fibonacci_sphere(center, opts.shell_radius, opts.test_factor * opts.shell_samples);
    let k_max = opts.ks.iter().copied().max().unwrap_or(0);
    let cb = cross_approximate_with(pc.points(), &shell, &kernel, 0.0, k_max, opts.row_pivot)?;
    let curve = residual_curve(&cb, &kernel, pc.points(), &test);
    let bbox = BBox::new([-opts.half_width; 3], [opts.half_width; 3]);
    let mut rows = Vec::new();
    for &k in &opts.ks {
        let j = k.min(cb.rank());
        let chebyshev_error = cube_root(k)
            .map(|n| chebyshev_reference(&bbox, &kernel, n, pc.points(), &test))
            .transpose()?;
        rows.push(Table1Row {
            k,
            cross_error: curve[j],
            cross_error_on_shell: cb.residual_history()[j],
            lebesgue: if j == 0 { 0.0 } else { lebesgue_prefix(&cb, &kernel, pc.points(), j) },
            chebyshev_error,
        });
    }
    let shell_bound = check_shell_bound(&cb, &kernel, pc.points(), &shell, 0.0)?;
    Ok(Table1Report {
        options: opts.clone(),
        n_points: pc.len(),
        test_points: test.len(),
        rank_reached: cb.rank(),
        rows,
        shell_bound,
        seconds: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_roots() {
        assert_eq!(cube_root(1), Some(1));
        assert_eq!(cube_root(27), Some(3));
        assert_eq!(cube_root(125), Some(5));
        assert_eq!(cube_root(30), None);
    }

    #[test]
    fn small_table() {
        let opts = Table1Options {
            grid_n: 4,
            shell_samples: 128,
            ks: vec![1, 8, 10],
            ..Table1Options::default()
        };
        let r = table1_experiment(&opts).unwrap();
        assert_eq!(r.n_points, 64);
        assert_eq!(r.test_points, 384);
        assert_eq!(r.rows.len(), 3);
        assert!(r.rows[2].chebyshev_error.is_none());
        assert!(r.rows[1].cross_error < r.rows[0].cross_error);
        assert!(r.shell_bound.passed());
        assert!(r.to_text().lines().count() == 4);
    }
}
