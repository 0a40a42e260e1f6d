use h2aca::geometry::{build_block_partition, build_cluster_tree, BlockPartition, ClusterTree, PointCloud};
use h2aca::h2::{
    assemble_h, assemble_h2, read_h2, write_h2, BlockKind, H2Error, H2Matrix, H2Options, LinearOperator,
};
use h2aca::harness::{gen_cube_grid, gen_ellipsoid_surface, relative_error, DenseOracle};
use h2aca::kernel::Kernel;
use proptest::prelude::*;

struct Setup {
    rows: PointCloud<f64>,
    cols: PointCloud<f64>,
    row_tree: ClusterTree<f64>,
    col_tree: ClusterTree<f64>,
    part: BlockPartition<f64>,
}

fn square(n: usize) -> Setup {
    let pc = gen_ellipsoid_surface(n, 5).unwrap();
    let tree = build_cluster_tree(&pc, 25).unwrap();
    let part = build_block_partition(&tree, &tree, 0.8, 25);
    Setup {
        rows: pc.clone(),
        cols: pc,
        row_tree: tree.clone(),
        col_tree: tree,
        part,
    }
}

fn opts(eps: f64) -> H2Options<f64> {
    let mut o = H2Options::new(eps);
    o.n_min_h2 = 40;
    o.shell_samples = 384;
    o
}

fn build(s: &Setup, kernel: &Kernel<f64>, eps: f64) -> H2Matrix<f64> {
    assemble_h2(kernel, &s.rows, &s.cols, &s.row_tree, &s.col_tree, &s.part, &opts(eps)).unwrap()
}

#[test]
fn every_partition_leaf_is_stored_once() {
    let s = square(900);
    let m = build(&s, &Kernel::newton(), 1e-5);
    let mut seen = (0, 0, 0);
    for b in s.part.admissible.iter().chain(&s.part.nonadmissible) {
        match m.find_block(b.row, b.col).expect("leaf stored") {
            BlockKind::Coupling(_) => seen.0 += 1,
            BlockKind::LowRank(_) => seen.1 += 1,
            BlockKind::Dense(_) => seen.2 += 1,
        }
    }
    assert_eq!(seen, (m.couplings().len(), m.aca_blocks().len(), m.nearfield().len()));
    assert!(seen.0 > 0);
    for c in m.couplings() {
        assert_eq!(c.f.rows(), m.row_basis().rank(c.row));
        assert_eq!(c.f.cols(), m.col_basis().rank(c.col));
    }
}

#[test]
fn storage_units_match_block_dimensions() {
    let s = square(900);
    let m = build(&s, &Kernel::newton(), 1e-5);
    let mut basis = 0;
    for set in [m.row_basis(), m.col_basis()] {
        for node in set.nodes() {
            if let Some(u) = &node.leaf {
                assert_eq!(u.rows(), s.row_tree.cluster(node.cluster).size());
                assert_eq!(u.cols(), node.rank());
                basis += u.rows() * u.cols();
            }
            if let Some(t) = &node.transfer {
                let parent = s.row_tree.cluster(node.cluster).parent.unwrap();
                assert_eq!((t.rows(), t.cols()), (node.rank(), set.rank(parent)));
                basis += t.rows() * t.cols();
            }
        }
    }
    let coupling: usize = m.couplings().iter().map(|c| c.f.rows() * c.f.cols()).sum();
    let lowrank: usize = m.aca_blocks().iter().map(|b| b.a.cols() * (b.rows.len() + b.cols.len())).sum();
    let dense: usize = m.nearfield().iter().map(|b| b.rows.len() * b.cols.len()).sum();
    let r = m.storage();
    assert_eq!(r.h2_basis_units, basis);
    assert_eq!(r.h2_coupling_units, coupling);
    assert_eq!(r.h2_units, basis + coupling + lowrank + dense);
    assert_eq!(r.compression_h2, r.h2_units as f64 / (900.0 * 900.0));
    assert_eq!(m.covered_entries(), 900 * 900);
}

#[test]
fn rectangular_weighted_operator_matches_dense() {
    let rows = gen_ellipsoid_surface(800, 1).unwrap();
    let grid = gen_cube_grid::<f64>(9).unwrap();
    let cols = PointCloud::new(grid.points().iter().map(|p| [p[0] + 4.0, p[1], 2.0 * p[2]]).collect()).unwrap();
    let xi: Vec<f64> = (0..rows.len()).map(|i| 1.0 + (i % 7) as f64 / 7.0).collect();
    let zeta: Vec<f64> = (0..cols.len()).map(|j| 0.5 + (j % 3) as f64).collect();
    let kernel = Kernel::power(1.0, 1.0)
        .unwrap()
        .with_row_weights(xi)
        .unwrap()
        .with_col_weights(zeta)
        .unwrap();
    let row_tree = build_cluster_tree(&rows, 25).unwrap();
    let col_tree = build_cluster_tree(&cols, 25).unwrap();
    let part = build_block_partition(&row_tree, &col_tree, 0.8, 25);
    let s = Setup {
        rows,
        cols,
        row_tree,
        col_tree,
        part,
    };
    let m = build(&s, &kernel, 1e-6);
    assert!(!m.couplings().is_empty());
    assert_eq!((m.nrows(), m.ncols()), (800, 729));
    let x: Vec<f64> = (0..729).map(|j| ((j * 37) % 11) as f64 - 5.0).collect();
    let exact = DenseOracle::new(&kernel, &s.rows, &s.cols).matvec(&x).unwrap();
    assert!(relative_error(&m.matvec(&x).unwrap(), &exact) <= 1e-5);
    let h = assemble_h(&kernel, &s.rows, &s.cols, &s.row_tree, &s.col_tree, &s.part, 1e-6, 150).unwrap();
    // ACA's Frobenius estimate is looser than the shell check of the bases
    assert!(relative_error(&h.matvec(&x).unwrap(), &exact) <= 1e-4);
}

#[test]
fn dimension_mismatch_is_reported() {
    let s = square(300);
    let m = build(&s, &Kernel::newton(), 1e-4);
    assert_eq!(
        m.matvec(&[1.0; 5]),
        Err(H2Error::DimensionMismatch { expected: 300, got: 5 })
    );
}

#[test]
fn container_file_roundtrip() {
    let s = square(700);
    let m = build(&s, &Kernel::newton(), 1e-5);
    let path = std::env::temp_dir().join(format!("h2aca-roundtrip-{}.bin", std::process::id()));
    write_h2(&m, &mut std::fs::File::create(&path).unwrap()).unwrap();
    let back: H2Matrix<f64> = read_h2(&mut std::fs::File::open(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).unwrap();
    assert_eq!(back.to_bytes(), m.to_bytes());
    let x: Vec<f64> = (0..700).map(|i| (i as f64).sin()).collect();
    let (a, b) = (m.matvec(&x).unwrap(), back.matvec(&x).unwrap());
    assert!(a.iter().zip(&b).all(|(p, q)| p.to_bits() == q.to_bits()));

    let bytes = m.to_bytes();
    assert_eq!(&bytes[..8], b"H2ACAOP\0");
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(H2Matrix::<f64>::from_bytes(&bad).is_err());
    assert!(H2Matrix::<f64>::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    let mut longer = bytes;
    longer.push(0);
    assert!(H2Matrix::<f64>::from_bytes(&longer).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn matvec_is_linear(
        x in prop::collection::vec(-1.0f64..1.0, 400),
        z in prop::collection::vec(-1.0f64..1.0, 400),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        thread_local! {
            static OP: H2Matrix<f64> = build(&square(400), &Kernel::newton(), 1e-4);
        }
        OP.with(|m| {
            let comb: Vec<f64> = x.iter().zip(&z).map(|(p, q)| a * p + b * q).collect();
            let lhs = m.matvec(&comb).unwrap();
            let (mx, mz) = (m.matvec(&x).unwrap(), m.matvec(&z).unwrap());
            let rhs: Vec<f64> = mx.iter().zip(&mz).map(|(p, q)| a * p + b * q).collect();
            let scale = mx.iter().chain(&mz).map(|v| v.abs()).fold(0.0, f64::max) * (a.abs() + b.abs());
            for (l, r) in lhs.iter().zip(&rhs) {
                prop_assert!((l - r).abs() <= 1e-12 * scale.max(1e-300));
            }
            Ok(())
        })?;
    }
}
