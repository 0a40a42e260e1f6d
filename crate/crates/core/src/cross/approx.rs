use crate::geometry::{distance, distance_sq, BBox, Point};
use crate::kernel::PairKernel;
use crate::linalg::{lu_factor, LinalgError, LuFactors, Matrix};
use crate::scalar::Real;

use super::{CrossError, FarShell};

/// Residual rows below this fraction of the initial maximum count as zero.
pub const ZERO_ROW_RTOL: f64 = 1e-14;

/// Why the pivot loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Termination {
    /// `2 · max|r_k| ≤ ε · max|r_0|` on the shell samples.
    Converged,
    /// The rank cap was reached before the tolerance.
    RankExhausted,
    /// Every remaining residual row vanished (rank equals the data rank).
    ResidualVanished,
}

/// Result of the harmonic cross approximation of one cluster.
///
/// Holds the row pivots `[x]` (cluster points), far pivots `[v]` (shell
/// samples), and the factorized pivot matrix `C_k = f([x], [v])`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossBasis<T> {
    pub cluster_id: Option<usize>,
    x_pivots: Vec<usize>,
    x_points: Vec<Point<T>>,
    v_pivots: Vec<usize>,
    v_points: Vec<Point<T>>,
    ck: Matrix<T>,
    ck_lu: LuFactors<T>,
    pivot_values: Vec<T>,
    residual_history: Vec<T>,
    fill_distances: Vec<T>,
    lebesgue: T,
    termination: Termination,
}

impl<T: Real> CrossBasis<T> {
    /// Final rank `k`.
    pub fn rank(&self) -> usize {
        self.x_pivots.len()
    }

    /// Indices of the row pivots into the cluster point list, in pivot order.
    pub fn x_pivots(&self) -> &[usize] {
        &self.x_pivots
    }

    pub fn x_points(&self) -> &[Point<T>] {
        &self.x_points
    }

    /// Indices of the far pivots into the shell samples, in pivot order.
    pub fn v_pivots(&self) -> &[usize] {
        &self.v_pivots
    }

    pub fn v_points(&self) -> &[Point<T>] {
        &self.v_points
    }

    /// `C_k` with `(C_k)_ij = f(x_i, v_j)`.
    pub fn ck(&self) -> &Matrix<T> {
        &self.ck
    }

    pub fn ck_lu(&self) -> &LuFactors<T> {
        &self.ck_lu
    }

    /// `r_{j-1}(x_j, v_j)` for `j = 1..=k`.
    pub fn pivot_values(&self) -> &[T] {
        &self.pivot_values
    }

    /// `max |r_j|` over cluster points × shell samples, `j = 0..=k`.
    pub fn residual_history(&self) -> &[T] {
        &self.residual_history
    }

    /// `max |r_0|`, the normalization of the stopping rule.
    pub fn initial_max(&self) -> T {
        self.residual_history[0]
    }

    pub fn final_residual(&self) -> T {
        *self.residual_history.last().expect("history starts at r_0")
    }

    /// Fill distance of the pivot set after each step.
    pub fn fill_distances(&self) -> &[T] {
        &self.fill_distances
    }

    /// `Λ_k = max_x Σ_i |L_k^{(i)}(x)|` over the cluster points.
    pub fn lebesgue(&self) -> T {
        self.lebesgue
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn converged(&self) -> bool {
        self.termination != Termination::RankExhausted
    }

    /// Storage of the factorized pivot matrix and pivot coordinates.
    pub fn scalar_count(&self) -> usize {
        let k = self.rank();
        k * k + 6 * k
    }
}

/// Row pivot selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowPivot {
    /// Farthest point from the current pivots (minimizes the fill distance).
    FillDistance,
    /// Row holding the largest residual entry.
    #[default]
    MaxResidual,
}

/// Harmonic cross approximation of `f` restricted to cluster points × far field.
///
/// Keeps the dense residual `R ∈ ℝ^{|X|×m}` over cluster points and shell
/// samples and applies `R ← R − R e_v e_xᵀ R / R[x, v]` per step. The row
/// pivot follows [`RowPivot::default`]; the column pivot maximizes the
/// residual row. Stops once `2 · max|R| ≤ eps · max|R_0|` or at `k_max`.
pub fn cross_approximate<T: Real, K: PairKernel<T>>(
    points: &[Point<T>],
    shell: &FarShell<T>,
    kernel: &K,
    eps: T,
    k_max: usize,
) -> Result<CrossBasis<T>, CrossError> {
    cross_approximate_with(points, shell, kernel, eps, k_max, RowPivot::default())
}

/// [`cross_approximate`] with an explicit row pivot rule.
pub fn cross_approximate_with<T: Real, K: PairKernel<T>>(
    points: &[Point<T>],
    shell: &FarShell<T>,
    kernel: &K,
    eps: T,
    k_max: usize,
    rule: RowPivot,
) -> Result<CrossBasis<T>, CrossError> {
    if points.is_empty() {
        return Err(CrossError::EmptyCluster);
    }
    if !(eps >= T::zero()) {
        return Err(CrossError::InvalidParameter(format!("eps must be >= 0, got {eps}")));
    }
    let n = points.len();
    let m = shell.len();
    let samples = &shell.samples;

    let mut res = Matrix::from_fn(n, m, |p, q| kernel.eval(&points[p], &samples[q]));
    if !res.is_finite() {
        return Err(CrossError::NonFiniteKernel);
    }
    let mut row_max: Vec<T> = (0..n).map(|p| abs_max(res.row(p))).collect();
    let norm0 = row_max.iter().fold(T::zero(), |a, &b| a.max(b));
    let zero_row = T::lit(ZERO_ROW_RTOL) * norm0;

    let center = BBox::from_points(points).center();
    let mut min_dist = vec![T::infinity(); n];
    let mut chosen = vec![false; n];
    let mut x_pivots = Vec::new();
    let mut v_pivots = Vec::new();
    let mut pivot_values = Vec::new();
    let mut history = vec![norm0];
    let mut fills = Vec::new();
    let cap = k_max.min(n).min(m);
    let converged = |r: T| T::lit(2.0) * r <= eps * norm0;

    let mut termination = if norm0 == T::zero() {
        Termination::ResidualVanished
    } else {
        Termination::RankExhausted
    };
    let mut col = vec![T::zero(); n];
    let mut row = vec![T::zero(); m];
    while norm0 > T::zero() && x_pivots.len() < cap {
        if converged(*history.last().unwrap()) {
            termination = Termination::Converged;
            break;
        }
        let pick = match rule {
            RowPivot::FillDistance => {
                select_row(points, &center, &min_dist, &chosen, &row_max, zero_row, x_pivots.is_empty())
            }
            RowPivot::MaxResidual => largest_row(&chosen, &row_max, zero_row),
        };
        let Some(x) = pick else {
            termination = Termination::ResidualVanished;
            break;
        };
        let (v, _) = argmax_abs(res.row(x));
        let pivot = res[(x, v)];

        col.iter_mut().enumerate().for_each(|(i, c)| *c = res[(i, v)]);
        row.copy_from_slice(res.row(x));
        let mut overall = T::zero();
        for i in 0..n {
            let factor = col[i] / pivot;
            let r = res.row_mut(i);
            let mut rmax = T::zero();
            if factor != T::zero() {
                for (a, &b) in r.iter_mut().zip(&row) {
                    *a -= factor * b;
                    rmax = rmax.max(a.abs());
                }
            } else {
                rmax = abs_max(r);
            }
            row_max[i] = rmax;
            overall = overall.max(rmax);
        }
        // eliminated exactly, not just to rounding
        res.row_mut(x).iter_mut().for_each(|a| *a = T::zero());
        row_max[x] = T::zero();

        chosen[x] = true;
        let px = points[x];
        let mut fill = T::zero();
        for (d, p) in min_dist.iter_mut().zip(points) {
            *d = d.min(distance(&px, p));
            fill = fill.max(*d);
        }
        fills.push(fill);
        x_pivots.push(x);
        v_pivots.push(v);
        pivot_values.push(pivot);
        history.push(overall);
    }
    if termination == Termination::RankExhausted && converged(*history.last().unwrap()) {
        termination = Termination::Converged;
    }

    finalize(points, samples, kernel, x_pivots, v_pivots, pivot_values, history, fills, termination)
}

#[allow(clippy::too_many_arguments)]
fn finalize<T: Real, K: PairKernel<T>>(
    points: &[Point<T>],
    samples: &[Point<T>],
    kernel: &K,
    mut x_pivots: Vec<usize>,
    mut v_pivots: Vec<usize>,
    mut pivot_values: Vec<T>,
    mut history: Vec<T>,
    mut fills: Vec<T>,
    mut termination: Termination,
) -> Result<CrossBasis<T>, CrossError> {
    // A numerically singular C_k means the rank was reached earlier.
    let (ck, ck_lu) = loop {
        let xs: Vec<Point<T>> = x_pivots.iter().map(|&i| points[i]).collect();
        let vs: Vec<Point<T>> = v_pivots.iter().map(|&j| samples[j]).collect();
        let ck = Matrix::from_fn(xs.len(), vs.len(), |i, j| kernel.eval(&xs[i], &vs[j]));
        match lu_factor(&ck) {
            Ok(lu) => break (ck, lu),
            Err(LinalgError::SingularMatrix { .. }) if !x_pivots.is_empty() => {
                x_pivots.pop();
                v_pivots.pop();
                pivot_values.pop();
                history.pop();
                fills.pop();
                termination = Termination::ResidualVanished;
            }
            Err(e) => return Err(e.into()),
        }
    };
    let x_points: Vec<Point<T>> = x_pivots.iter().map(|&i| points[i]).collect();
    let v_points: Vec<Point<T>> = v_pivots.iter().map(|&j| samples[j]).collect();
    let mut basis = CrossBasis {
        cluster_id: None,
        x_pivots,
        x_points,
        v_pivots,
        v_points,
        ck,
        ck_lu,
        pivot_values,
        residual_history: history,
        fill_distances: fills,
        lebesgue: T::zero(),
        termination,
    };
    basis.lebesgue = lebesgue_constant(&basis, kernel, points);
    Ok(basis)
}

fn select_row<T: Real>(
    points: &[Point<T>],
    center: &Point<T>,
    min_dist: &[T],
    chosen: &[bool],
    row_max: &[T],
    zero_row: T,
    first: bool,
) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (p, pt) in points.iter().enumerate() {
        if chosen[p] || !(row_max[p] > zero_row) {
            continue;
        }
        // first pivot: nearest to the center; then: farthest from the pivots
        let score = if first {
            -distance_sq(pt, center)
        } else {
            min_dist[p]
        };
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((p, score));
        }
    }
    match best {
        Some((p, score)) if first || score > T::zero() => Some(p),
        // every admissible candidate coincides with a pivot: take the largest residual row
        _ => largest_row(chosen, row_max, zero_row),
    }
}

fn largest_row<T: Real>(chosen: &[bool], row_max: &[T], zero_row: T) -> Option<usize> {
    let (p, v) = (0..row_max.len())
        .filter(|&p| !chosen[p])
        .map(|p| (p, row_max[p]))
        .fold(None, |acc: Option<(usize, T)>, (p, v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((p, v)),
        })?;
    (v > zero_row).then_some(p)
}

fn abs_max<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |a, &b| a.max(b.abs()))
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

/// `L_k(x) = C_k^{-T} v_k(x)` with `v_k(x)_j = f(x, v_j)`.
pub fn lagrange_vector<T: Real, K: PairKernel<T>>(b: &CrossBasis<T>, kernel: &K, x: &Point<T>) -> Vec<T> {
    let v: Vec<T> = b.v_points.iter().map(|vp| kernel.eval(x, vp)).collect();
    b.ck_lu.solve_vec(&v, true).expect("dimension matches rank")
}

/// Lagrange vectors of many points at once: row `p` is `L_k(points[p])ᵀ`.
pub fn lagrange_matrix<T: Real, K: PairKernel<T>>(
    b: &CrossBasis<T>,
    kernel: &K,
    points: &[Point<T>],
) -> Matrix<T> {
    let k = b.rank();
    let rhs = Matrix::from_fn(k, points.len(), |j, p| kernel.eval(&points[p], &b.v_points[j]));
    b.ck_lu
        .solve(&rhs, true)
        .expect("dimension matches rank")
        .transpose()
}

/// `s_k(x, y) = v_k(x)ᵀ C_k^{-1} w_k(y)` with `w_k(y)_i = f(x_i, y)`.
pub fn interpolant_eval<T: Real, K: PairKernel<T>>(
    b: &CrossBasis<T>,
    kernel: &K,
    x: &Point<T>,
    y: &Point<T>,
) -> T {
    let l = lagrange_vector(b, kernel, x);
    l.iter()
        .zip(&b.x_points)
        .map(|(&li, xi)| li * kernel.eval(xi, y))
        .sum()
}

fn lebesgue_constant<T: Real, K: PairKernel<T>>(b: &CrossBasis<T>, kernel: &K, points: &[Point<T>]) -> T {
    if b.rank() == 0 {
        return T::zero();
    }
    let l = lagrange_matrix(b, kernel, points);
    (0..l.rows())
        .map(|p| l.row(p).iter().map(|v| v.abs()).sum::<T>())
        .fold(T::zero(), T::max)
}

/// Measured far-field behaviour of a finished cross approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarFieldError<T> {
    /// `max |r_k|` over cluster points × shell samples.
    pub max_on_samples: T,
    /// `max |r_k|` over cluster points × test points, from `s_k` directly.
    pub max_on_test: T,
    pub lebesgue: T,
    /// Ball-ratio constant `q` of the shell bound.
    pub q: T,
    /// `q δ` times the gradient bound `(1 + Λ_k) max|∇_y f|`, when the
    /// kernel provides one. Monitored only.
    pub gradient_term: Option<T>,
}

/// Compares the residual on the shell samples with the residual on an
/// independent far-field test set.
pub fn far_field_error<T: Real, K: PairKernel<T>>(
    b: &CrossBasis<T>,
    kernel: &K,
    points: &[Point<T>],
    shell: &FarShell<T>,
    test_points: &[Point<T>],
) -> FarFieldError<T> {
    let l = lagrange_matrix(b, kernel, points);
    let mut max_on_test = T::zero();
    let mut w = vec![T::zero(); b.rank()];
    for y in test_points {
        for (wi, xi) in w.iter_mut().zip(&b.x_points) {
            *wi = kernel.eval(xi, y);
        }
        for (p, x) in points.iter().enumerate() {
            let s: T = l.row(p).iter().zip(&w).map(|(&a, &c)| a * c).sum();
            max_on_test = max_on_test.max((kernel.eval(x, y) - s).abs());
        }
    }
    let q = T::lit(super::shell_bound_constant(3));
    let min_gap = points
        .iter()
        .map(|p| shell.radius - distance(p, &shell.center))
        .fold(T::infinity(), T::min);
    let gradient_term = kernel
        .gradient_bound(min_gap)
        .map(|g| (T::one() + b.lebesgue) * g * q * shell.delta);
    FarFieldError {
        max_on_samples: b.final_residual(),
        max_on_test,
        lebesgue: b.lebesgue,
        q,
        gradient_term,
    }
}

/// `max |r_j|` over cluster points × `test_points` for every step
/// `j = 0..=k`, by replaying the recorded pivot sequence on the test set.
pub fn residual_curve<T: Real, K: PairKernel<T>>(
    b: &CrossBasis<T>,
    kernel: &K,
    points: &[Point<T>],
    test_points: &[Point<T>],
) -> Vec<T> {
    let k = b.rank();
    let n = points.len();
    // columns: the k far pivots, then the test points
    let cols = k + test_points.len();
    let mut res = Matrix::from_fn(n, cols, |p, c| {
        if c < k {
            kernel.eval(&points[p], &b.v_points[c])
        } else {
            kernel.eval(&points[p], &test_points[c - k])
        }
    });
    let test_max = |res: &Matrix<T>| {
        (0..n)
            .map(|p| abs_max(&res.row(p)[k..]))
            .fold(T::zero(), T::max)
    };
    let mut curve = vec![test_max(&res)];
    let mut col = vec![T::zero(); n];
    for step in 0..k {
        let x = b.x_pivots[step];
        let pivot = res[(x, step)];
        col.iter_mut().enumerate().for_each(|(i, c)| *c = res[(i, step)]);
        let row = res.row(x).to_vec();
        for (i, &ci) in col.iter().enumerate() {
            let factor = ci / pivot;
            if factor == T::zero() {
                continue;
            }
            for (a, &r) in res.row_mut(i).iter_mut().zip(&row) {
                *a -= factor * r;
            }
        }
        res.row_mut(x).iter_mut().for_each(|a| *a = T::zero());
        curve.push(test_max(&res));
    }
    curve
}

/// Per-step convergence record: `(k, max residual on samples, Λ_k)`.
pub fn convergence_table<T: Real, K: PairKernel<T>>(
    b: &CrossBasis<T>,
    kernel: &K,
    points: &[Point<T>],
) -> Vec<(usize, T, T)> {
    (0..=b.rank())
        .map(|j| {
            let lambda = if j == 0 {
                T::zero()
            } else {
                lebesgue_prefix(b, kernel, points, j)
            };
            (j, b.residual_history[j], lambda)
        })
        .collect()
}

/// `Λ_j` of the interpolant built from the first `j` pivots.
pub fn lebesgue_prefix<T: Real, K: PairKernel<T>>(b: &CrossBasis<T>, kernel: &K, points: &[Point<T>], j: usize) -> T {
    let idx: Vec<usize> = (0..j).collect();
    let Ok(lu) = lu_factor(&b.ck.select(&idx, &idx)) else {
        return T::nan();
    };
    let rhs = Matrix::from_fn(j, points.len(), |i, p| kernel.eval(&points[p], &b.v_points[i]));
    let l = lu.solve(&rhs, true).expect("square");
    (0..points.len())
        .map(|p| (0..j).map(|i| l[(i, p)].abs()).sum::<T>())
        .fold(T::zero(), T::max)
}

/// CSV lines `k,max_residual_on_M,lebesgue` for a convergence plot.
pub fn convergence_csv<T: Real, K: PairKernel<T>>(b: &CrossBasis<T>, kernel: &K, points: &[Point<T>]) -> String {
    let mut out = String::from("k,max_residual_on_M,lebesgue\n");
    for (k, r, l) in convergence_table(b, kernel, points) {
        out.push_str(&format!("{k},{r:e},{l:e}\n"));
    }
    out
}
