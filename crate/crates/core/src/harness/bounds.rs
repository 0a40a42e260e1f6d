use serde::{Deserialize, Serialize};

use crate::cross::{residual_curve, CrossBasis, CrossError, FarShell};
use crate::geometry::Point;
use crate::kernel::PairKernel;
use crate::scalar::Real;

/// Shell-bound check of one cross approximation: at every step `j`, the
/// residual on a shell three times denser than the sample shell must stay
/// below `2 max_M |r_j| + ½ eps ‖R⁰‖`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellBoundCheck {
    pub steps: usize,
    /// Largest ratio of test-shell residual to the bound.
    pub worst_ratio: f64,
    pub violations: usize,
}

impl ShellBoundCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            steps: self.steps + other.steps,
            worst_ratio: self.worst_ratio.max(other.worst_ratio),
            violations: self.violations + other.violations,
        }
    }

    pub fn empty() -> Self {
        Self {
            steps: 0,
            worst_ratio: 0.0,
            violations: 0,
        }
    }
}

/// Replays `cb` on a Fibonacci shell with the same center and radius as
/// `shell` and three times its sample count.
pub fn check_shell_bound<T: Real, K: PairKernel<T>>(
    cb: &CrossBasis<T>,
    kernel: &K,
    points: &[Point<T>],
    shell: &FarShell<T>,
    eps: f64,
) -> Result<ShellBoundCheck, CrossError> {
    let dense = FarShell::sphere(shell.center, shell.radius, 3 * shell.len())?;
    let curve = residual_curve(cb, kernel, points, &dense.samples);
    let history = cb.residual_history();
    let slack = 0.5 * eps * history[0].as_f64();
    let mut out = ShellBoundCheck::empty();
    for (test, on_m) in curve.iter().zip(history) {
        let bound = 2.0 * on_m.as_f64() + slack;
        let ratio = if bound > 0.0 {
            test.as_f64() / bound
        } else if test.as_f64() == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        out.steps += 1;
        out.worst_ratio = out.worst_ratio.max(ratio);
        if ratio > 1.0 {
            out.violations += 1;
        }
    }
    Ok(out)
}
