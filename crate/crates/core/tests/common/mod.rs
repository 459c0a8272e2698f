//! Small spaces, exhaustive map enumeration, and brute-force oracles shared
//! by the integration suites.
#![allow(dead_code)]

use std::sync::Arc;

use setpoint_core::{MetricSpace, MultiMap, Norm, PointSet};

/// Reference spaces with one to four points.
pub fn small_spaces() -> Vec<Arc<MetricSpace>> {
    let line = |c: &[f64]| MetricSpace::line(c).unwrap();
    let square = MetricSpace::embedded(
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        Norm::L2,
        1e-9,
    )
    .unwrap();
    let equilateral = MetricSpace::from_matrix(
        vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]],
        1e-9,
    )
    .unwrap();
    // one hub at distance 1 from three leaves
    let star = MetricSpace::from_matrix(
        vec![
            vec![0.0, 1.0, 1.0, 1.0],
            vec![1.0, 0.0, 2.0, 2.0],
            vec![1.0, 2.0, 0.0, 2.0],
            vec![1.0, 2.0, 2.0, 0.0],
        ],
        1e-9,
    )
    .unwrap();
    vec![
        line(&[0.0]),
        line(&[0.0, 1.0]),
        line(&[0.0, 1.0, 2.0]),
        line(&[0.0, 1.0, 3.0]),
        equilateral,
        line(&[0.0, 1.0, 2.0, 3.0]),
        square,
        star,
    ]
    .into_iter()
    .map(Arc::new)
    .collect()
}

/// Nonempty subsets of `0..n` with at most `max` elements.
pub fn subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << n))
        .filter(|m| m.count_ones() as usize <= max)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

/// Every self-map of `space` with values of cardinality at most `max`.
pub fn all_maps(space: &Arc<MetricSpace>, max: usize) -> impl Iterator<Item = MultiMap> + '_ {
    let n = space.len();
    let options = subsets(n, max);
    let total = options.len().pow(n as u32);
    (0..total).map(move |mut code| {
        let rows: Vec<(usize, Vec<usize>)> = (0..n)
            .map(|x| {
                let v = options[code % options.len()].clone();
                code /= options.len();
                (x, v)
            })
            .collect();
        MultiMap::from_table(space.clone(), rows).unwrap()
    })
}

pub fn dist_to_set(sp: &MetricSpace, x: usize, a: &[usize]) -> f64 {
    a.iter().map(|&y| sp.d(x, y)).fold(f64::INFINITY, f64::min)
}

pub fn hausdorff_oracle(sp: &MetricSpace, a: &[usize], b: &[usize]) -> f64 {
    let one = |a: &[usize], b: &[usize]| a.iter().map(|&x| dist_to_set(sp, x, b)).fold(0.0, f64::max);
    one(a, b).max(one(b, a))
}

/// Points with `x ∈ F(x)`, by direct membership.
pub fn fixed_oracle(map: &MultiMap) -> Vec<usize> {
    map.domain()
        .iter()
        .filter(|&x| map.values(x).unwrap().as_slice().contains(&x))
        .collect()
}

pub fn gap_oracle(map: &MultiMap, x: usize) -> f64 {
    dist_to_set(map.space(), x, map.values(x).unwrap().as_slice())
}

/// Largest ratio `D(F(x),F(y)) / d(x,y)` over distinct domain pairs.
pub fn lipschitz_oracle(map: &MultiMap) -> f64 {
    let sp = map.space();
    let dom: Vec<usize> = map.domain().iter().collect();
    let mut best: f64 = 0.0;
    for &x in &dom {
        for &y in &dom {
            if x != y {
                let h = hausdorff_oracle(sp, map.values(x).unwrap().as_slice(), map.values(y).unwrap().as_slice());
                best = best.max(h / sp.d(x, y));
            }
        }
    }
    best
}

pub fn set(v: &[usize]) -> PointSet {
    PointSet::new(v.iter().copied()).unwrap()
}
