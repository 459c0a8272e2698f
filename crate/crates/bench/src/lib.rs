//! Fixtures shared by the kernel benchmarks in `benches/`.

use setpoint_core::instances::{self, LineInstance, ValueMode};
use setpoint_core::{InstanceSampler, MultiMap, PointSet, SamplerConfig};

/// A sampled map on exactly `n` points.
pub fn sampled_map(n: usize, mode: ValueMode, seed: u64) -> MultiMap {
    let sampler = InstanceSampler::new(SamplerConfig {
        min_points: n,
        max_points: n,
        max_value_size: 3,
        modes: vec![mode],
    });
    sampler.sample(seed, 0).map
}

/// Two halves of the universe of `map`, as Hausdorff operands.
pub fn halves(map: &MultiMap) -> (PointSet, PointSet) {
    let n = map.space().len();
    let a = PointSet::new(0..n / 2).expect("nonempty");
    let b = PointSet::new(n / 2..n).expect("nonempty");
    (a, b)
}

pub fn dyad(levels: u32) -> LineInstance {
    instances::dyad_levels(levels)
}
