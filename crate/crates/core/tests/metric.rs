mod common;

use proptest::prelude::*;
use rand::Rng;
use setpoint_core::instances::{random_space, trial_rng};
use setpoint_core::{MetricSpace, PointSet};

use common::*;

fn space_and_sets(max_n: usize) -> impl Strategy<Value = (u64, usize, Vec<u32>)> {
    (any::<u64>(), 1..=max_n).prop_flat_map(|(seed, n)| {
        let full = (1u32 << n) - 1;
        (Just(seed), Just(n), prop::collection::vec(1..=full, 4))
    })
}

fn build(seed: u64, n: usize) -> MetricSpace {
    random_space(&mut trial_rng(seed, 0), n)
}

fn mask(m: u32, n: usize) -> PointSet {
    PointSet::new((0..n).filter(|i| m >> i & 1 == 1)).unwrap()
}

proptest! {
    #[test]
    fn hausdorff_axioms((seed, n, masks) in space_and_sets(8)) {
        let sp = build(seed, n);
        let tol = sp.tolerance();
        let (a, b, c) = (mask(masks[0], n), mask(masks[1], n), mask(masks[2], n));
        prop_assert_eq!(sp.hausdorff(&a, &b), sp.hausdorff(&b, &a));
        prop_assert!((sp.hausdorff(&a, &b) - hausdorff_oracle(&sp, a.as_slice(), b.as_slice())).abs() <= tol);
        prop_assert_eq!(sp.hausdorff(&a, &a), 0.0);
        if a != b {
            prop_assert!(sp.hausdorff(&a, &b) > 0.0);
        }
        prop_assert!(sp.hausdorff(&a, &c) <= sp.hausdorff(&a, &b) + sp.hausdorff(&b, &c) + tol);
    }

    #[test]
    fn point_distance_moves_by_at_most_hausdorff((seed, n, masks) in space_and_sets(8)) {
        let sp = build(seed, n);
        let (a, b) = (mask(masks[0], n), mask(masks[1], n));
        for i in 0..n {
            prop_assert!(sp.point_set_dist(i, &a) <= sp.hausdorff(&a, &b) + sp.point_set_dist(i, &b) + sp.tolerance());
        }
    }

    #[test]
    fn segment_is_symmetric_and_grows_with_tolerance(seed in any::<u64>(), n in 2usize..=8) {
        let sp = build(seed, n);
        let loose = sp.clone().with_tolerance(1e-3).unwrap();
        for i in 0..n {
            for j in 0..n {
                let seg = sp.metric_segment(i, j);
                prop_assert_eq!(&seg, &sp.metric_segment(j, i));
                prop_assert!(seg.contains(i) && seg.contains(j));
                prop_assert!(seg.is_subset(&loose.metric_segment(i, j)));
            }
        }
    }

    #[test]
    fn chebyshev_is_monotone((seed, n, masks) in space_and_sets(7)) {
        let sp = build(seed, n);
        let (a, pool) = (mask(masks[0], n), mask(masks[1], n));
        let (a_big, pool_big) = (a.union(&mask(masks[2], n)), pool.union(&mask(masks[3], n)));
        let tol = sp.tolerance();
        prop_assert!(sp.chebyshev(&a, &pool).radius <= sp.chebyshev(&a_big, &pool).radius + tol);
        prop_assert!(sp.chebyshev(&a, &pool_big).radius <= sp.chebyshev(&a, &pool).radius + tol);
    }

    #[test]
    fn chebyshev_matches_brute_force((seed, n, masks) in space_and_sets(7)) {
        let sp = build(seed, n);
        let (a, pool) = (mask(masks[0], n), mask(masks[1], n));
        let radius = pool
            .iter()
            .map(|z| a.iter().map(|k| sp.d(z, k)).fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min);
        let c = sp.chebyshev(&a, &pool);
        prop_assert!((c.radius - radius).abs() <= sp.tolerance());
        for z in c.centers.iter() {
            prop_assert!(pool.contains(z));
            prop_assert!(sp.covering_value(z, &a) <= radius + sp.tolerance());
        }
    }
}

#[test]
fn matrix_spaces_reject_broken_triangles() {
    let d = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
    assert!(MetricSpace::from_matrix(d, 1e-9).is_err());
}

#[test]
fn repaired_matrices_are_metrics() {
    for trial in 0..200 {
        let mut rng = trial_rng(77, trial);
        let n = rng.random_range(1..=8);
        let sp = setpoint_core::instances::repaired_metric(&mut rng, n);
        assert!(
            MetricSpace::from_matrix(sp.distance_matrix(), 1e-9).is_ok(),
            "trial {trial}"
        );
    }
}
