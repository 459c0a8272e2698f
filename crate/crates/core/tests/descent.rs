mod common;

use proptest::prelude::*;
use setpoint_core::descent::{
    build_co15_step, build_co18_step, graph_descent_co16, pair_descent_co20, telescoping_violation,
};
use setpoint_core::instances::ValueMode;
use setpoint_core::*;

use common::*;

fn sampled(seed: u64, trial: u64) -> MultiMap {
    InstanceSampler::new(SamplerConfig {
        min_points: 2,
        max_points: 9,
        max_value_size: 3,
        modes: vec![
            ValueMode::Clustered,
            ValueMode::Funnel,
            ValueMode::Chain,
            ValueMode::Uniform,
        ],
    })
    .sample(seed, trial)
    .map
}

fn holds(map: &MultiMap, id: ConditionId, p: &ConditionParams) -> bool {
    check_condition(map, id, p).unwrap().holds
}

proptest! {
    // most sampled instances fail the hypothesis and are skipped
    #![proptest_config(ProptestConfig { max_global_rejects: 1 << 20, ..ProptestConfig::default() })]

    #[test]
    fn caristi_descent_telescopes_and_ends_fixed(trial in 0u64..5000, weight in 1.0f64..4.0, scale in 0.25f64..1.0) {
        let map = sampled(31, trial);
        let phi = Potential::from_fn(&map, |x| weight * map.gap(x).unwrap()).unwrap();
        let delta = ScaledMetric::scaled(scale).unwrap();
        let global = holds(&map, ConditionId::Co13, &ConditionParams::default().with_potential(phi.clone()).with_metric(delta.clone()));
        let fixed = fixed_oracle(&map);
        for x0 in map.domain().iter() {
            let v = caristi_descent(&map, &phi, &delta, x0, None).unwrap();
            prop_assert_eq!(telescoping_violation(&map, &delta, &v), None);
            let path = v.path();
            let total = delta.d(map.space(), path[0], *path.last().unwrap());
            let drop = phi.get(path[0]).unwrap() - phi.get(*path.last().unwrap()).unwrap();
            prop_assert!(total <= drop + path.len() as f64 * map.tolerance());
            if global {
                prop_assert!(v.succeeded() && fixed.contains(&v.end));
            }
        }
    }

    #[test]
    fn contraction_with_co14_gives_co15(trial in 0u64..5000, frac in 0.1f64..0.9) {
        let map = sampled(32, trial);
        let alpha = map.lipschitz_estimate().max(0.05);
        prop_assume!(alpha < 0.8);
        let eps = frac * (1.0 - alpha);
        let co14 = check_condition(&map, ConditionId::Co14, &ConditionParams::alpha_eps(alpha, eps)).unwrap();
        prop_assume!(co14.holds);
        let step = build_co15_step(&map, alpha, eps, &co14).unwrap();
        prop_assert!(step.report.holds);
    }

    #[test]
    fn contraction_with_co17_gives_co18_and_descents_agree(trial in 0u64..5000, frac in 0.2f64..0.9) {
        let map = sampled(33, trial);
        let alpha = map.lipschitz_estimate().max(0.05);
        prop_assume!(alpha < 0.8);
        let eps = frac * (1.0 - alpha);
        let eps1 = eps / 2.0;
        let co17 = check_condition(&map, ConditionId::Co17, &ConditionParams::alpha_eps(alpha, eps).with_epsilon1(eps1)).unwrap();
        prop_assume!(co17.holds);
        let step = build_co18_step(&map, alpha, eps, eps1, &co17).unwrap();
        prop_assert!(step.report.holds);
        let k = step.k.unwrap();
        let metric = GraphMetric::product_max(&map, 1.0 - alpha - eps, k).unwrap();
        let fixed = fixed_oracle(&map);
        for start in map.graph() {
            let g = graph_descent_co16(&map, &step.delta, k, start, None).unwrap();
            let h = pair_descent_co20(&map, &metric, start, None).unwrap();
            prop_assert_eq!(g.succeeded(), h.succeeded());
            prop_assert!(g.succeeded() && fixed.contains(&g.end.x) && fixed.contains(&h.end.x));
        }
    }
}

#[test]
fn gap_descent_walks_down_a_line() {
    let map = setpoint_core::instances::line_descending();
    let fixed = fixed_oracle(&map);
    for x0 in map.domain().iter() {
        let v = gap_descent(&map, &ScaledMetric::scaled(0.5).unwrap(), x0, None).unwrap();
        assert!(v.succeeded() && fixed.contains(&v.end), "from {x0}: {v:?}");
    }
}
