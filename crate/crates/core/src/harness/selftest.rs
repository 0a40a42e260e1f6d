use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cross::{
    cross_approximate, interpolant_eval, make_far_shell, CrossBasis, FarShell,
};
use crate::geometry::{build_block_partition, build_cluster_tree, BBox, Point, PointCloud};
use crate::h2::{
    aca_block, assemble_h, assemble_h2, build_transfer, BasisMode, H2Matrix, H2Options, LinearOperator,
};
use crate::kernel::{Kernel, PairKernel};
use crate::linalg::{singular_values, Matrix};

use super::bounds::check_shell_bound;
use super::generators::gen_ellipsoid_surface;
use super::oracle::DenseOracle;
use super::run::{norm2, relative_error};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> SelfCheck {
    SelfCheck {
        name: name.to_string(),
        passed,
        detail,
    }
}

fn random_cluster(rng: &mut ChaCha8Rng, n: usize, half: [f64; 3]) -> Vec<Point<f64>> {
    (0..n)
        .map(|_| [0, 1, 2].map(|a| rng.gen_range(-half[a]..=half[a])))
        .collect()
}

fn laplace_det(a: &[Vec<f64>]) -> f64 {
    match a.len() {
        0 => 1.0,
        1 => a[0][0],
        n => (0..n)
            .map(|j| {
                let minor: Vec<Vec<f64>> = a[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, &v)| v).collect())
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[0][j] * laplace_det(&minor)
            })
            .sum(),
    }
}

fn determinant_identity(rng: &mut ChaCha8Rng, kernel: &Kernel<f64>) -> SelfCheck {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let pts = random_cluster(rng, 40, [0.5, 0.4, 0.3]);
        let shell = make_far_shell(&BBox::from_points(&pts), 0.8, 128).expect("valid box");
        let cb = cross_approximate(&pts, &shell, kernel, 0.0, 6).expect("cross");
        let rows: Vec<Vec<f64>> = (0..cb.rank()).map(|i| cb.ck().row(i).to_vec()).collect();
        let det = laplace_det(&rows);
        let prod: f64 = cb.pivot_values().iter().product();
        worst = worst.max(((det - prod) / det).abs());
    }
    check("determinant_identity", worst <= 1e-8, format!("max relative deviation {worst:.2e}"))
}

fn interpolation_exactness(rng: &mut ChaCha8Rng, kernel: &Kernel<f64>) -> SelfCheck {
    let pts = random_cluster(rng, 200, [0.5, 0.5, 0.5]);
    let shell = make_far_shell(&BBox::from_points(&pts), 0.8, 256).expect("valid box");
    let cb = cross_approximate(&pts, &shell, kernel, 1e-8, 120).expect("cross");
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let dir = [0, 1, 2].map(|_| rng.gen_range(-1.0..1.0));
        let len = norm2(&dir);
        let r = shell.radius * rng.gen_range(1.0..2.0);
        let y = [0, 1, 2].map(|a| shell.center[a] + r * dir[a] / len);
        for x in cb.x_points() {
            let f = kernel.eval(x, &y);
            worst = worst.max((interpolant_eval(&cb, kernel, x, &y) - f).abs() / f.abs());
        }
    }
    check("interpolation_exactness", worst <= 1e-10, format!("rank {}, max relative deviation {worst:.2e}", cb.rank()))
}

fn shell_bound(rng: &mut ChaCha8Rng, kernel: &Kernel<f64>) -> SelfCheck {
    let pts = random_cluster(rng, 300, [1.0, 0.5, 0.25]);
    let shell = make_far_shell(&BBox::from_points(&pts), 0.8, 400).expect("valid box");
    let cb = cross_approximate(&pts, &shell, kernel, 1e-6, 150).expect("cross");
    match check_shell_bound(&cb, kernel, &pts, &shell, 1e-6) {
        Ok(c) => check(
            "shell_bound",
            c.passed(),
            format!("{} steps, worst ratio {:.3}", c.steps, c.worst_ratio),
        ),
        Err(e) => check("shell_bound", false, e.to_string()),
    }
}

fn transfer_identity(rng: &mut ChaCha8Rng, kernel: &Kernel<f64>) -> SelfCheck {
    let parent_pts = random_cluster(rng, 200, [0.5, 0.5, 0.5]);
    let child_pts: Vec<Point<f64>> = parent_pts.iter().copied().filter(|p| p[0] < 0.0).collect();
    let build = |pts: &[Point<f64>]| -> CrossBasis<f64> {
        let shell = make_far_shell(&BBox::from_points(pts), 0.8, 256).expect("valid box");
        cross_approximate(pts, &shell, kernel, 1e-8, 120).expect("cross")
    };
    let (parent, child) = (build(&parent_pts), build(&child_pts));
    let t = build_transfer(&parent, &child, kernel);
    let g = Matrix::from_fn(child.rank(), parent.rank(), |i, j| kernel.eval(&child.x_points()[i], &parent.v_points()[j]));
    let rel = t.matmul(parent.ck()).expect("conforming").sub(&g).expect("same shape").frobenius_norm() / g.frobenius_norm();
    check("transfer_identity", rel <= 1e-9, format!("relative residual {rel:.2e}"))
}

fn aca_against_svd(kernel: &Kernel<f64>) -> SelfCheck {
    let left = FarShell::sphere([0.0; 3], 0.5, 150).expect("shell").samples;
    let right = FarShell::sphere([2.0, 0.3, 0.0], 0.5, 120).expect("shell").samples;
    let a = Matrix::from_fn(left.len(), right.len(), |i, j| kernel.eval(&left[i], &right[j]));
    let eps = 1e-6;
    let r = aca_block(a.rows(), a.cols(), |i, j| a[(i, j)], eps, 100);
    let k = r.a.cols();
    let err = r.a.matmul(&r.b.transpose()).expect("conforming").sub(&a).expect("same shape");
    let sa = singular_values(&a);
    let sigma_next = sa.get(k).copied().unwrap_or(0.0);
    let err2 = singular_values(&err).first().copied().unwrap_or(0.0);
    let total: f64 = sa.iter().map(|s| s * s).sum();
    let eps_rank = (0..=sa.len())
        .find(|&r| sa[r..].iter().map(|s| s * s).sum::<f64>() <= eps * eps * total)
        .unwrap_or(sa.len());
    let passed = err2 >= sigma_next * (1.0 - 1e-8) && k <= 3 * eps_rank.max(1);
    check(
        "aca_against_svd",
        passed,
        format!("rank {k} vs eps-rank {eps_rank}; error {err2:.2e} vs sigma_k+1 {sigma_next:.2e}"),
    )
}

struct Problem {
    pc: PointCloud<f64>,
    kernel: Kernel<f64>,
    dense: Vec<f64>,
    x: Vec<f64>,
    z: Vec<f64>,
}

fn build_h2(p: &Problem, eps: f64, mode: BasisMode) -> H2Matrix<f64> {
    let tree = build_cluster_tree(&p.pc, 25).expect("tree");
    let part = build_block_partition(&tree, &tree, 0.8, 25);
    let mut opts = H2Options::new(eps);
    opts.n_min_h2 = 40;
    opts.shell_samples = 384;
    opts.mode = mode;
    assemble_h2(&p.kernel, &p.pc, &p.pc, &tree, &tree, &part, &opts).expect("assembly")
}

fn operator_checks(rng: &mut ChaCha8Rng) -> Vec<SelfCheck> {
    let pc = gen_ellipsoid_surface(1000, 1).expect("geometry");
    let kernel = Kernel::newton();
    let x: Vec<f64> = (0..pc.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let z: Vec<f64> = (0..pc.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dense = DenseOracle::new(&kernel, &pc, &pc).matvec(&x).expect("oracle");
    let p = Problem { pc, kernel, dense, x, z };
    let eps = 1e-6;
    let mut out = Vec::new();

    let nested = build_h2(&p, eps, BasisMode::Nested);
    let y = nested.matvec(&p.x).expect("matvec");
    let err = relative_error(&y, &p.dense);
    out.push(check("h2_vs_dense", err <= 10.0 * eps, format!("relative error {err:.2e} at eps {eps:.0e}")));

    let tree = nested.row_tree().clone();
    let part = build_block_partition(&tree, &tree, 0.8, 25);
    let h = assemble_h(&p.kernel, &p.pc, &p.pc, &tree, &tree, &part, eps, 150).expect("assembly");
    let err = relative_error(&h.matvec(&p.x).expect("matvec"), &p.dense);
    out.push(check("h_vs_dense", err <= 10.0 * eps, format!("relative error {err:.2e} at eps {eps:.0e}")));

    let (alpha, beta) = (0.75, -1.5);
    let comb: Vec<f64> = p.x.iter().zip(&p.z).map(|(a, b)| alpha * a + beta * b).collect();
    let lhs = nested.matvec(&comb).expect("matvec");
    let yz = nested.matvec(&p.z).expect("matvec");
    let rhs: Vec<f64> = y.iter().zip(&yz).map(|(a, b)| alpha * a + beta * b).collect();
    let err = relative_error(&lhs, &rhs);
    out.push(check("matvec_linearity", err <= 1e-12, format!("relative deviation {err:.2e}")));

    let uniform = build_h2(&p, eps, BasisMode::Uniform);
    let err = relative_error(&uniform.matvec(&p.x).expect("matvec"), &y);
    let limit = 10.0 * tree.depth() as f64 * eps;
    out.push(check("uniform_vs_nested", err <= limit, format!("relative deviation {err:.2e}, limit {limit:.1e}")));

    let bytes = nested.to_bytes();
    let ok = match H2Matrix::<f64>::from_bytes(&bytes) {
        Ok(back) => {
            back.to_bytes() == bytes
                && back.matvec(&p.x).expect("matvec").iter().zip(&y).all(|(a, b)| a.to_bits() == b.to_bits())
        }
        Err(_) => false,
    };
    out.push(check("serialization_roundtrip", ok, format!("{} bytes", bytes.len())));

    let again = build_h2(&p, eps, BasisMode::Nested).matvec(&p.x).expect("matvec");
    let same = again.iter().zip(&y).all(|(a, b)| a.to_bits() == b.to_bits());
    out.push(check("deterministic_matvec", same, "two builds, bitwise comparison".into()));

    let zero = nested.matvec(&vec![0.0; p.pc.len()]).expect("matvec");
    out.push(check("zero_vector", zero.iter().all(|&v| v == 0.0), String::new()));
    out
}

/// Quick invariant suite run by `h2aca selftest`.
pub fn selftest() -> Vec<SelfCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let kernel = Kernel::power(1.0, 1.0).expect("valid kernel");
    let mut out = vec![
        determinant_identity(&mut rng, &kernel),
        interpolation_exactness(&mut rng, &kernel),
        shell_bound(&mut rng, &kernel),
        transfer_identity(&mut rng, &kernel),
        aca_against_svd(&kernel),
    ];
    out.extend(operator_checks(&mut rng));
    out
}
