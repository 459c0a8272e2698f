mod common;

use std::sync::Arc;

use proptest::prelude::*;
use setpoint_core::conditions::check_spec;
use setpoint_core::*;

use common::*;

fn sampled(seed: u64, trial: u64) -> MultiMap {
    InstanceSampler::new(SamplerConfig {
        max_points: 7,
        ..SamplerConfig::default()
    })
    .sample(seed, trial)
    .map
}

/// The map with its points renamed by `perm` and all distances scaled by `c`.
fn relabel(map: &MultiMap, perm: &[usize], c: f64) -> MultiMap {
    let sp = map.space();
    let n = sp.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            d[perm[i]][perm[j]] = c * sp.d(i, j);
        }
    }
    let space = Arc::new(MetricSpace::from_matrix(d, sp.tolerance()).unwrap());
    let rows = map
        .rows()
        .map(|(x, v)| (perm[x], v.iter().map(|y| perm[y]).collect::<Vec<_>>()));
    MultiMap::from_table(space, rows).unwrap()
}

fn holds(map: &MultiMap, id: ConditionId, p: ConditionParams) -> bool {
    check_condition(map, id, &p).unwrap().holds
}

proptest! {
    #[test]
    fn gap_vanishes_exactly_at_fixed_points(seed in any::<u64>(), trial in 0u64..64) {
        let map = sampled(seed, trial);
        let fixed = fixed_oracle(&map);
        prop_assert_eq!(map.fixed_points(), fixed.clone());
        for x in map.domain().iter() {
            prop_assert_eq!(map.gap(x).unwrap() == 0.0, fixed.contains(&x));
            prop_assert!((map.gap(x).unwrap() - gap_oracle(&map, x)).abs() <= 1e-12);
        }
    }

    #[test]
    fn gap_obeys_the_triangle_chain(seed in any::<u64>(), trial in 0u64..64) {
        let map = sampled(seed, trial);
        let sp = map.space();
        for x in map.domain().iter() {
            for z in map.domain().iter() {
                let bound = map.gap(x).unwrap() + sp.d(x, z) + sp.hausdorff(map.values(x).unwrap(), map.values(z).unwrap());
                prop_assert!(map.gap(z).unwrap() <= bound + sp.tolerance());
            }
        }
    }

    #[test]
    fn lipschitz_estimate_is_relabel_invariant_and_scales(
        seed in any::<u64>(),
        trial in 0u64..64,
        c in 0.01f64..100.0,
        shift in 0usize..7,
    ) {
        let map = sampled(seed, trial);
        let n = map.space().len();
        let perm: Vec<usize> = (0..n).map(|i| (i * 5 + shift) % n).collect();
        if perm.iter().collect::<std::collections::BTreeSet<_>>().len() == n {
            let l = map.lipschitz_estimate();
            prop_assert!((relabel(&map, &perm, 1.0).lipschitz_estimate() - l).abs() <= 1e-9 * l.max(1.0));
            prop_assert!((relabel(&map, &(0..n).collect::<Vec<_>>(), c).lipschitz_estimate() - l).abs() <= 1e-9 * l.max(1.0));
        }
        prop_assert!((map.lipschitz_estimate() - lipschitz_oracle(&map)).abs() <= 1e-12);
    }

    #[test]
    fn lipschitz_estimate_is_the_sharp_contraction_constant(seed in any::<u64>(), trial in 0u64..64) {
        let map = sampled(seed, trial);
        let l = map.lipschitz_estimate();
        prop_assert!(holds(&map, ConditionId::Co2, ConditionParams::alpha(l)));
        if l > 1e-6 {
            prop_assert!(!holds(&map, ConditionId::Co2, ConditionParams::alpha(l * (1.0 - 1e-6))));
        }
    }

    #[test]
    fn reports_are_reproducible(seed in any::<u64>(), trial in 0u64..64, id in 0usize..4) {
        let map = sampled(seed, trial);
        let id = [ConditionId::Co2, ConditionId::Co3, ConditionId::Co4, ConditionId::Co5][id];
        let p = ConditionParams::alpha_eps(0.6, 0.2);
        let a = check_condition(&map, id, &p).unwrap();
        let b = check_condition(&map, id, &p).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        prop_assert_eq!(a.holds, a.falsifier.is_none());
    }

    #[test]
    fn co3_implies_co7_at_the_combined_rate(
        seed in any::<u64>(),
        trial in 0u64..64,
        alpha in 0.1f64..0.8,
        frac in 0.05f64..0.95,
    ) {
        let map = sampled(seed, trial);
        let eps = frac * (1.0 - alpha);
        if holds(&map, ConditionId::Co3, ConditionParams::alpha_eps(alpha, eps)) {
            prop_assert!(holds(&map, ConditionId::Co7, ConditionParams::alpha(alpha + eps)));
        }
    }
}

/// (2) with α implies (3) for every ε, and (4) implies (3) at ε = 0, on every
/// map of every small space.
#[test]
fn contraction_implications_on_all_small_maps() {
    let mut tested = [0usize; 2];
    for space in small_spaces() {
        let max = if space.len() <= 3 { 3 } else { 2 };
        for map in all_maps(&space, max) {
            for alpha in [0.5, 0.9] {
                if holds(&map, ConditionId::Co2, ConditionParams::alpha(alpha)) {
                    tested[0] += 1;
                    for eps in [1e-3, 0.05, 0.5 * (1.0 - alpha)] {
                        assert!(
                            holds(&map, ConditionId::Co3, ConditionParams::alpha_eps(alpha, eps)),
                            "{:?}",
                            map.to_spec()
                        );
                    }
                }
                if holds(&map, ConditionId::Co4, ConditionParams::alpha(alpha)) {
                    tested[1] += 1;
                    for eps in [0.0, 0.05] {
                        assert!(
                            holds(&map, ConditionId::Co3, ConditionParams::alpha_eps(alpha, eps)),
                            "{:?}",
                            map.to_spec()
                        );
                    }
                }
            }
        }
    }
    assert!(tested[0] >= 100 && tested[1] >= 100, "{tested:?}");
}

#[test]
fn every_condition_reports_a_falsifier_or_witnesses() {
    let map = setpoint_core::instances::line_three();
    for id in [
        ConditionId::Co2,
        ConditionId::Co3,
        ConditionId::Co4,
        ConditionId::Co5,
        ConditionId::Co7,
    ] {
        let r = check_spec(&map, &ConditionSpec::new(id, ConditionParams::alpha_eps(0.5, 0.1))).unwrap();
        assert_eq!(r.holds, r.falsifier.is_none(), "{id:?}");
    }
}
