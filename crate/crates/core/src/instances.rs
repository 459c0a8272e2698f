//! Named reference instances and the seeded random instance sampler.

use std::ops::Deref;
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::metric::{MetricSpace, Norm, PointSet, DEFAULT_TOLERANCE};
use crate::multimap::{MapRule, MultiMap};

/// A map on a one-dimensional space, addressable by coordinate.
#[derive(Debug, Clone)]
pub struct LineInstance {
    pub map: MultiMap,
}

impl LineInstance {
    pub fn new(map: MultiMap) -> Self {
        LineInstance { map }
    }

    /// Index of the point with coordinate `c`. Panics if absent.
    pub fn point_at(&self, c: f64) -> usize {
        let sp = self.map.space();
        (0..sp.len())
            .find(|&i| (sp.coords(i).expect("line instance")[0] - c).abs() <= sp.tolerance())
            .unwrap_or_else(|| panic!("no point at {c}"))
    }
}

impl Deref for LineInstance {
    type Target = MultiMap;
    fn deref(&self) -> &MultiMap {
        &self.map
    }
}

/// Halving `F(x) = {x/2}` on `{0} ∪ {2^-k : k = 0..=20}` inside the universe
/// that also holds `2^-21`.
pub fn dyad() -> LineInstance {
    dyad_levels(20)
}

pub fn dyad_levels(levels: u32) -> LineInstance {
    let space = Arc::new(MetricSpace::dyad(levels));
    LineInstance::new(MultiMap::from_rule(space, MapRule::Halve, &serde_json::Value::Null).expect("halving rule"))
}

/// Line `{0,1,2}` with `F(0)={0}, F(1)={0}, F(2)={0,2}`.
pub fn line_three() -> MultiMap {
    let space = Arc::new(MetricSpace::line(&[0.0, 1.0, 2.0]).expect("line"));
    MultiMap::from_table(space, [(0, vec![0]), (1, vec![0]), (2, vec![0, 2])]).expect("table")
}

/// Two points at distance one swapped by the map.
pub fn unit_two_cycle() -> MultiMap {
    let space = Arc::new(MetricSpace::line(&[0.0, 1.0]).expect("line"));
    MultiMap::from_table(space, [(0, [1]), (1, [0])]).expect("table")
}

/// Line `{0,1,2}` with `F(0)={0}, F(1)={0}, F(2)={1}`.
pub fn line_descending() -> MultiMap {
    let space = Arc::new(MetricSpace::line(&[0.0, 1.0, 2.0]).expect("line"));
    MultiMap::from_table(space, [(0, [0]), (1, [0]), (2, [1])]).expect("table")
}

/// Gaps shrink geometrically along the min-gap orbit from point 0 while the
/// steps stay near 10: values hold a near point with a large gap and a far
/// point with a small one.
///
/// Points: `0, 0.8, 5, 10, 10.4, 20`; the orbit is `0 → 10 → 20`.
pub fn shrinking_gap_chain() -> MultiMap {
    let space = Arc::new(MetricSpace::line(&[0.0, 0.8, 5.0, 10.0, 10.4, 20.0]).expect("line"));
    MultiMap::from_table(
        space,
        [
            (0, vec![1, 3]),
            (1, vec![0]),
            (2, vec![0]),
            (3, vec![4, 5]),
            (4, vec![3]),
            (5, vec![5]),
        ],
    )
    .expect("table")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueMode {
    /// Independent random subsets.
    Uniform,
    /// Values drawn near one random point; usually a contraction.
    Clustered,
    /// Every value contains a common fixed point, which is also nearest.
    Funnel,
    /// Each point maps to its nearest point strictly closer to a random sink.
    Chain,
    /// A random permutation, singleton-valued.
    Permutation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub min_points: usize,
    pub max_points: usize,
    pub max_value_size: usize,
    #[serde(default = "all_modes")]
    pub modes: Vec<ValueMode>,
}

fn all_modes() -> Vec<ValueMode> {
    vec![
        ValueMode::Uniform,
        ValueMode::Clustered,
        ValueMode::Funnel,
        ValueMode::Chain,
        ValueMode::Permutation,
    ]
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            min_points: 2,
            max_points: 8,
            max_value_size: 3,
            modes: all_modes(),
        }
    }
}

/// One sampled self-map, tagged with the seed and trial that produced it.
#[derive(Debug, Clone)]
pub struct SampledInstance {
    pub seed: u64,
    pub trial: u64,
    pub mode: ValueMode,
    pub map: MultiMap,
}

/// Counter-based sampler: trial `i` of seed `s` is always the same instance,
/// independent of which other trials ran.
#[derive(Debug, Clone, Default)]
pub struct InstanceSampler {
    pub config: SamplerConfig,
}

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

impl InstanceSampler {
    pub fn new(config: SamplerConfig) -> Self {
        InstanceSampler { config }
    }

    pub fn sample(&self, seed: u64, trial: u64) -> SampledInstance {
        let mut rng = trial_rng(seed, trial);
        let lo = self.config.min_points.max(1);
        let hi = self.config.max_points.max(lo);
        let n = rng.random_range(lo..=hi);
        let space = Arc::new(random_space(&mut rng, n));
        let mode = *self.config.modes.choose(&mut rng).unwrap_or(&ValueMode::Uniform);
        let values = random_values(&mut rng, &space, mode, self.config.max_value_size.max(1));
        let map = MultiMap::new(space, PointSet::range(n), values).expect("sampled values are in range");
        SampledInstance { seed, trial, mode, map }
    }
}

/// Random finite metric: a point cloud under a random norm, a grid line, or the
/// shortest-path closure of a random symmetric weight matrix.
pub fn random_space<R: Rng>(rng: &mut R, n: usize) -> MetricSpace {
    match rng.random_range(0..3) {
        0 => {
            let norm = *[Norm::L1, Norm::L2, Norm::Linf, Norm::Lp(3.0)]
                .choose(rng)
                .expect("nonempty");
            let pts = distinct_points(rng, n, 2, 16);
            MetricSpace::embedded(pts, norm, DEFAULT_TOLERANCE).expect("distinct grid points")
        }
        1 => {
            let pts = distinct_points(rng, n, 1, 2 * n.max(2) as u32);
            MetricSpace::embedded(pts, Norm::L2, DEFAULT_TOLERANCE).expect("distinct grid points")
        }
        _ => repaired_metric(rng, n),
    }
}

fn distinct_points<R: Rng>(rng: &mut R, n: usize, dim: usize, grid: u32) -> Vec<Vec<f64>> {
    let cells = (grid as usize + 1).pow(dim as u32);
    assert!(n <= cells, "grid too coarse for {n} points");
    let mut seen = std::collections::BTreeSet::new();
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        let cell: Vec<u32> = (0..dim).map(|_| rng.random_range(0..=grid)).collect();
        if seen.insert(cell.clone()) {
            pts.push(cell.iter().map(|&c| c as f64 / grid as f64).collect());
        }
    }
    pts
}

/// Shortest-path closure of random symmetric weights in `[1, 10]`.
pub fn repaired_metric<R: Rng>(rng: &mut R, n: usize) -> MetricSpace {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = rng.random_range(1..=20) as f64 / 2.0;
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    MetricSpace::from_matrix(d, DEFAULT_TOLERANCE).expect("shortest-path closure is a metric")
}

fn random_subset<R: Rng>(rng: &mut R, pool: &[usize], max: usize) -> Vec<usize> {
    let k = rng.random_range(1..=max.min(pool.len()).max(1));
    pool.choose_multiple(rng, k).copied().collect()
}

fn random_values<R: Rng>(rng: &mut R, space: &MetricSpace, mode: ValueMode, max: usize) -> Vec<PointSet> {
    let n = space.len();
    let all: Vec<usize> = (0..n).collect();
    let set = |v: Vec<usize>| PointSet::new(v).expect("nonempty subset");
    match mode {
        ValueMode::Uniform => (0..n).map(|_| set(random_subset(rng, &all, max))).collect(),
        ValueMode::Clustered => {
            let c = rng.random_range(0..n);
            let mut near = all.clone();
            near.sort_by(|&a, &b| space.d(c, a).total_cmp(&space.d(c, b)).then(a.cmp(&b)));
            let width = rng.random_range(1..=2.min(n));
            let pool = &near[..width];
            (0..n).map(|_| set(random_subset(rng, pool, max))).collect()
        }
        ValueMode::Funnel => {
            let c = rng.random_range(0..n);
            (0..n)
                .map(|x| {
                    let dc = space.d(x, c);
                    let farther: Vec<usize> = all
                        .iter()
                        .copied()
                        .filter(|&y| y != c && space.d(x, y) > dc + space.tolerance())
                        .collect();
                    let mut v = vec![c];
                    if max > 1 && !farther.is_empty() && rng.random_bool(0.7) {
                        v.extend(random_subset(rng, &farther, max - 1));
                    }
                    set(v)
                })
                .collect()
        }
        ValueMode::Chain => {
            let sink = rng.random_range(0..n);
            (0..n)
                .map(|x| {
                    let dx = space.d(x, sink);
                    let closer = all
                        .iter()
                        .copied()
                        .filter(|&y| space.d(y, sink) < dx)
                        .min_by(|&a, &b| space.d(x, a).total_cmp(&space.d(x, b)).then(a.cmp(&b)));
                    let mut v = vec![closer.unwrap_or(x)];
                    if max > 1 && rng.random_bool(0.4) {
                        v.extend(random_subset(rng, &all, max - 1));
                    }
                    set(v)
                })
                .collect()
        }
        ValueMode::Permutation => {
            let mut perm = all.clone();
            perm.shuffle(rng);
            perm.into_iter().map(PointSet::singleton).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampler_is_counter_based() {
        let s = InstanceSampler::default();
        let a = s.sample(11, 5);
        let b = s.sample(11, 5);
        assert_eq!(a.map.to_spec(), b.map.to_spec());
        assert_eq!(a.map.space().to_spec(), b.map.space().to_spec());
        let c = s.sample(11, 6);
        assert!(c.map.space().to_spec() != a.map.space().to_spec() || c.map.to_spec() != a.map.to_spec());
    }

    #[test]
    fn sampled_maps_are_total_self_maps() {
        let s = InstanceSampler::default();
        for t in 0..200 {
            let inst = s.sample(3, t);
            assert!(inst.map.is_self_map());
            assert_eq!(inst.map.domain().len(), inst.map.space().len());
        }
    }

    #[test]
    fn funnel_values_contain_a_common_fixed_point() {
        let s = InstanceSampler::new(SamplerConfig {
            modes: vec![ValueMode::Funnel],
            ..SamplerConfig::default()
        });
        for t in 0..50 {
            let m = s.sample(1, t).map;
            assert!(!m.fixed_points().is_empty());
        }
    }

    #[test]
    fn shrinking_chain_layout() {
        let m = shrinking_gap_chain();
        assert_eq!(m.fixed_points(), vec![5]);
        assert!((m.gap(0).unwrap() - 0.8).abs() < 1e-12);
        assert!((m.gap(3).unwrap() - 0.4).abs() < 1e-12);
    }
}
