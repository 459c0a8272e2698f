use proptest::prelude::*;
use setpoint_core::inward::{inward_membership_normed, lemma35_witness, InwardVerdict};
use setpoint_core::*;

fn lattice(norm: usize, cells: Vec<usize>) -> MetricSpace {
    let norm = [Norm::L1, Norm::L2, Norm::Linf][norm];
    let pts = cells
        .iter()
        .map(|&c| vec![(c % 6) as f64 / 5.0, (c / 6) as f64 / 5.0])
        .collect();
    MetricSpace::embedded(pts, norm, 1e-9).unwrap()
}

fn cloud() -> impl Strategy<Value = (usize, Vec<usize>)> {
    (0usize..3, prop::collection::btree_set(0usize..36, 2..10)).prop_map(|(n, c)| (n, c.into_iter().collect()))
}

proptest! {
    #[test]
    fn every_point_of_the_set_is_inward((norm, cells) in cloud()) {
        let sp = lattice(norm, cells);
        let all = sp.all_points();
        for x in 0..sp.len() {
            for t in 0..sp.len() {
                let c = generalized_inward_membership(&sp, &all, x, t, None).unwrap();
                prop_assert_eq!(c.verdict, InwardVerdict::Member);
            }
        }
    }

    #[test]
    fn normed_inward_points_are_generalized_inward((norm, cells) in cloud(), keep in 1usize..10) {
        let sp = lattice(norm, cells);
        let set = PointSet::new(0..keep.min(sp.len())).unwrap();
        for x in set.iter() {
            for t in 0..sp.len() {
                let normed = inward_membership_normed(&sp, &set, x, sp.coords(t).unwrap()).unwrap();
                if normed.member {
                    let c = generalized_inward_membership(&sp, &set, x, t, None).unwrap();
                    prop_assert!(c.is_member(), "x {} t {}: {:?}", x, t, c.verdict);
                }
            }
        }
    }

    #[test]
    fn lemma_witnesses_verify_themselves((norm, cells) in cloud(), keep in 1usize..10, eps in 0.05f64..0.9) {
        let sp = lattice(norm, cells);
        let set = PointSet::new(0..keep.min(sp.len())).unwrap();
        let tol = sp.tolerance();
        for x in set.iter() {
            for t in 0..sp.len() {
                let c = generalized_inward_membership(&sp, &set, x, t, None).unwrap();
                for w in &c.per_beta {
                    prop_assert!(set.contains(w.z));
                    prop_assert!(w.ratio <= w.beta + tol);
                }
                if !c.is_member() {
                    continue;
                }
                let Ok(w) = lemma35_witness(&sp, &c, eps, Some(&set)) else { continue };
                prop_assert!(set.contains(w.z));
                prop_assert_eq!(w.lhs, (1.0 - eps) * sp.d(x, w.z));
                prop_assert_eq!(w.rhs, sp.d(x, t) - sp.d(w.z, t));
                prop_assert_eq!(w.holds, w.lhs <= w.rhs + tol);
                prop_assert!(w.holds, "x {} t {}: {:?}", x, t, w);
            }
        }
    }
}

#[test]
fn a_point_past_the_end_of_a_line_is_not_inward() {
    let sp = MetricSpace::line(&[0.0, 1.0, 2.0]).unwrap();
    let set = PointSet::new([0, 1]).unwrap();
    let c = generalized_inward_membership(&sp, &set, 1, 2, None).unwrap();
    assert!(!c.is_member());
    let back = generalized_inward_membership(&sp, &set, 1, 0, None).unwrap();
    assert_eq!(back.verdict, InwardVerdict::Member);
}
