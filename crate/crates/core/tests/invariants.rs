use h2aca::cross::{cross_approximate, lagrange_vector, make_far_shell};
use h2aca::geometry::{build_block_partition, build_cluster_tree, BBox, Point, PointCloud};
use h2aca::kernel::{Kernel, PairKernel};
use proptest::prelude::*;

type DenseMatrix = h2aca::DenseMatrix;
#[path = "../src/testing.rs"]
mod testing;

fn cloud(max: usize) -> impl Strategy<Value = Vec<Point<f64>>> {
    prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 8..max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn determinant_equals_pivot_product(pts in cloud(40), k in 1usize..7) {
        let shell = make_far_shell(&BBox::from_points(&pts), 0.8, 96).unwrap();
        let cb = cross_approximate(&pts, &shell, &Kernel::newton(), 0.0, k).unwrap();
        let det = testing::cofactor_det(cb.ck());
        let prod: f64 = cb.pivot_values().iter().product();
        prop_assert!(((det - prod) / det).abs() <= 1e-8);
    }

    #[test]
    fn lagrange_functions_are_cardinal_at_pivots(pts in cloud(60)) {
        let k = Kernel::<f64>::power(1.0, 1.0).unwrap();
        let shell = make_far_shell(&BBox::from_points(&pts), 0.8, 128).unwrap();
        let cb = cross_approximate(&pts, &shell, &k, 1e-10, 30).unwrap();
        for (j, x) in cb.x_points().iter().enumerate() {
            let l = lagrange_vector(&cb, &k, x);
            for (i, v) in l.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((v - expected).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn tree_and_partition_cover_the_index_set(pts in cloud(300), n_min in 1usize..40, eta in 0.2f64..2.0) {
        let pc = PointCloud::new(pts).unwrap();
        let tree = build_cluster_tree(&pc, n_min).unwrap();
        let mut perm = tree.perm().to_vec();
        perm.sort_unstable();
        prop_assert_eq!(perm, (0..pc.len()).collect::<Vec<_>>());
        for leaf in tree.leaves() {
            for &i in tree.indices(leaf.id) {
                prop_assert!(leaf.bbox.contains(pc.point(i)));
            }
        }
        let part = build_block_partition(&tree, &tree, eta, n_min);
        let area: usize = part
            .admissible
            .iter()
            .chain(&part.nonadmissible)
            .map(|b| tree.cluster(b.row).size() * tree.cluster(b.col).size())
            .sum();
        prop_assert_eq!(area, pc.len() * pc.len());
        for b in &part.admissible {
            let (t, s) = (tree.cluster(b.row).bbox, tree.cluster(b.col).bbox);
            prop_assert!(t.diameter().min(s.diameter()) <= eta * t.distance(&s));
        }
    }

    #[test]
    fn kernel_is_symmetric_and_decreasing(x in prop::array::uniform3(-2.0f64..2.0), y in prop::array::uniform3(-2.0f64..2.0)) {
        prop_assume!(testing::dist(&x, &y) > 1e-6);
        for k in [Kernel::newton(), Kernel::fractional(3, 0.2).unwrap()] {
            prop_assert_eq!(k.eval(&x, &y), k.eval(&y, &x));
            let far = [y[0] + (y[0] - x[0]), y[1] + (y[1] - x[1]), y[2] + (y[2] - x[2])];
            prop_assert!(k.eval(&x, &far) < k.eval(&x, &y));
        }
    }
}
