//! Centers and radii of shrinking set families and of finite sequences,
//! regular subsequences, and the nonexpansive fixed-point pipeline.
//!
//! A finite sequence of length `L` stands in for an infinite one through its
//! tails `A_n = {x_k : k ≥ n}` for `n ≤ ⌈L/2⌉`: the last of these, half the
//! sequence, plays the role of the far tail. Taking every tail down to the
//! final singleton would make every radius zero.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::conditions::{check_condition, ConditionId, ConditionParams, ConditionReport, SequenceData};
use crate::error::{Error, Result};
use crate::instances::trial_rng;
use crate::metric::{MetricSpace, PointSet};
use crate::multimap::MultiMap;
use crate::solver::{iterate_co7, resolve_limit, IterationTrace, LimitVerdict};

/// Sequences up to this length have every subsequence enumerated.
pub const EXHAUSTIVE_LEN: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterResult {
    pub radius: f64,
    pub centers: PointSet,
    pub tail_radii: Vec<f64>,
}

fn check_family(family: &[PointSet]) -> Result<()> {
    if family.is_empty() {
        return Err(Error::EmptySet);
    }
    for (k, w) in family.windows(2).enumerate() {
        if !w[1].is_subset(&w[0]) {
            return Err(Error::InvalidParams(format!(
                "family member {} is not contained in member {k}",
                k + 1
            )));
        }
    }
    Ok(())
}

/// Radius and central points of a family ordered by inclusion.
pub fn family_center(space: &MetricSpace, family: &[PointSet], pool: &PointSet) -> Result<CenterResult> {
    check_family(family)?;
    for a in family.iter().chain([pool]) {
        a.check_range(space.len())?;
    }
    let tail_radii: Vec<f64> = family.iter().map(|a| space.chebyshev(a, pool).radius).collect();
    let radius = tail_radii.iter().copied().fold(f64::INFINITY, f64::min);
    let value = |z: usize| {
        family
            .iter()
            .map(|a| space.covering_value(z, a))
            .fold(f64::INFINITY, f64::min)
    };
    let centers = PointSet::new(pool.iter().filter(|&z| value(z) <= radius + space.tolerance()))
        .expect("a minimizer of the last member attains the radius");
    Ok(CenterResult {
        radius,
        centers,
        tail_radii,
    })
}

/// The tail family `A_1 ⊇ … ⊇ A_m`, `m = ⌈L/2⌉`.
pub fn tails(seq: &[usize]) -> Result<Vec<PointSet>> {
    if seq.is_empty() {
        return Err(Error::EmptySet);
    }
    let m = seq.len().div_ceil(2);
    (0..m).map(|n| PointSet::new(seq[n..].iter().copied())).collect()
}

pub fn asymptotic_center(space: &MetricSpace, seq: &[usize], pool: &PointSet) -> Result<CenterResult> {
    family_center(space, &tails(seq)?, pool)
}

fn radius_of(space: &MetricSpace, seq: &[usize], pool: &PointSet) -> f64 {
    asymptotic_center(space, seq, pool)
        .expect("nonempty subsequence")
        .radius
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub regular: bool,
    pub radius: f64,
    /// Positions (into the sequence) of the smallest-radius subsequence seen.
    pub minimizing: Vec<usize>,
    pub minimizing_radius: f64,
    pub checked: usize,
    pub exhaustive: bool,
}

/// Subsequences (as position lists, length ≥ 2) to compare: every one up to
/// [`EXHAUSTIVE_LEN`], otherwise the value-constant ones, the full sequence
/// and `budget` random ones.
fn subsequences(seq: &[usize], budget: usize, seed: u64) -> (Vec<Vec<usize>>, bool) {
    let n = seq.len();
    if n <= EXHAUSTIVE_LEN {
        let all = (1u32..1 << n)
            .filter(|m| m.count_ones() >= 2)
            .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
            .collect();
        return (all, true);
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut values: Vec<usize> = seq.to_vec();
    values.sort_unstable();
    values.dedup();
    for v in values {
        let pos: Vec<usize> = (0..n).filter(|&i| seq[i] == v).collect();
        if pos.len() >= 2 {
            out.push(pos);
        }
    }
    out.push((0..n).collect());
    let mut rng = trial_rng(seed, n as u64);
    for _ in 0..budget {
        let k = 2 + (rand::Rng::random_range(&mut rng, 0..n - 1));
        let mut pos = sample(&mut rng, n, k).into_vec();
        pos.sort_unstable();
        out.push(pos);
    }
    (out, false)
}

fn pick(seq: &[usize], pos: &[usize]) -> Vec<usize> {
    pos.iter().map(|&i| seq[i]).collect()
}

/// Whether every checked subsequence has the radius of the whole sequence.
pub fn regularity_check(
    space: &MetricSpace,
    seq: &[usize],
    pool: &PointSet,
    budget: usize,
) -> Result<RegularityReport> {
    if seq.len() < 2 {
        return Err(Error::InvalidParams(
            "regularity needs a sequence of length at least 2".into(),
        ));
    }
    let radius = asymptotic_center(space, seq, pool)?.radius;
    let (subs, exhaustive) = subsequences(seq, budget, 0);
    let mut regular = true;
    let mut best = ((0..seq.len()).collect::<Vec<_>>(), radius);
    for pos in &subs {
        let r = radius_of(space, &pick(seq, pos), pool);
        if (r - radius).abs() > space.tolerance() {
            regular = false;
        }
        if r < best.1 - space.tolerance() {
            best = (pos.clone(), r);
        }
    }
    Ok(RegularityReport {
        regular,
        radius,
        minimizing: best.0,
        minimizing_radius: best.1,
        checked: subs.len(),
        exhaustive,
    })
}

/// Smallest-radius subsequence that is itself regular; ties go to the longer,
/// then to the lexicographically first position list.
pub fn regular_subsequence(space: &MetricSpace, seq: &[usize], pool: &PointSet, budget: usize) -> Result<Vec<usize>> {
    if seq.is_empty() {
        return Err(Error::EmptySet);
    }
    if seq.len() == 1 {
        return Ok(vec![0]);
    }
    let (subs, _) = subsequences(seq, budget, 1);
    let mut ranked: Vec<(f64, Vec<usize>)> = subs
        .into_iter()
        .map(|pos| (radius_of(space, &pick(seq, &pos), pool), pos))
        .collect();
    let tol = space.tolerance();
    ranked.sort_by(|a, b| {
        let by_radius = if (a.0 - b.0).abs() <= tol {
            std::cmp::Ordering::Equal
        } else {
            a.0.total_cmp(&b.0)
        };
        by_radius.then(b.1.len().cmp(&a.1.len())).then(a.1.cmp(&b.1))
    });
    for (_, pos) in &ranked {
        let sub = pick(seq, pos);
        if sub.len() < 2 || regularity_check(space, &sub, pool, budget)?.regular {
            return Ok(pos.clone());
        }
    }
    Ok(ranked
        .last()
        .map(|r| r.1.clone())
        .unwrap_or_else(|| (0..seq.len()).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineStage {
    /// No gap-vanishing sequence.
    GapSequence,
    RegularSubsequence,
    Center,
    /// None of (12), (11), (10) holds along the subsequence.
    Inclusion,
    /// The center is not a fixed point.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonexpansiveVerdict {
    pub fixed_point: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<PipelineStage>,
    pub trace: IterationTrace,
    pub limit: LimitVerdict,
    /// The gap-vanishing sequence continued by staying at its limit.
    pub sequence: Vec<usize>,
    pub subsequence: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center: Option<CenterResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub center_point: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub co12: Option<ConditionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub co11: Option<ConditionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub co10: Option<bool>,
}

/// Gap-vanishing sequence, regular subsequence, its asymptotic center, the
/// inclusion conditions, and the membership oracle, in that order.
pub fn nonexpansive_solve(map: &MultiMap, x0: usize, alpha: f64, budget: usize) -> Result<NonexpansiveVerdict> {
    let trace = iterate_co7(map, x0, alpha, None)?;
    let limit = resolve_limit(map, &trace)?;
    let mut v = NonexpansiveVerdict {
        fixed_point: None,
        failed_stage: None,
        trace,
        limit,
        sequence: Vec::new(),
        subsequence: Vec::new(),
        center: None,
        center_point: None,
        co12: None,
        co11: None,
        co10: None,
    };
    let Some(p) = v.limit.fixed_point else {
        v.failed_stage = Some(PipelineStage::GapSequence);
        return Ok(v);
    };
    // Once at a point of F(p) ∋ p, choosing p again keeps the gaps at zero.
    v.sequence = v.trace.points.clone();
    v.sequence.extend(std::iter::repeat_n(p, v.trace.len() + 1));

    let space = map.space();
    let pool = map.domain().clone();
    let pos = regular_subsequence(space, &v.sequence, &pool, budget)?;
    let sub = pick(&v.sequence, &pos);
    v.subsequence = pos.clone();
    if sub.len() >= 2 && !regularity_check(space, &sub, &pool, budget)?.regular {
        v.failed_stage = Some(PipelineStage::RegularSubsequence);
        return Ok(v);
    }

    let center = asymptotic_center(space, &sub, &pool)?;
    let x = center.centers.first();
    v.center = Some(center);
    v.center_point = Some(x);

    let chosen: Vec<usize> = pos
        .iter()
        .map(|&i| v.sequence.get(i + 1).copied().unwrap_or(p))
        .collect();
    let seq = SequenceData {
        points: sub.clone(),
        chosen: Some(chosen.clone()),
        center: x,
    };
    let params = ConditionParams::default().with_sequence(seq);
    let co12 = check_condition(map, ConditionId::Co12, &params)?;
    let co11 = check_condition(map, ConditionId::Co11, &params)?;
    let fx = map.values(x)?;
    let tail = &sub[sub.len() / 2..];
    let ys = &chosen[chosen.len() / 2..];
    let lhs = ys.iter().map(|&y| space.point_set_dist(y, fx)).fold(0.0, f64::max);
    let rhs = tail.iter().map(|&xn| space.d(x, xn)).fold(0.0, f64::max);
    let co10 = lhs <= rhs + space.tolerance();
    let any = co12.holds || co11.holds || co10;
    v.co12 = Some(co12);
    v.co11 = Some(co11);
    v.co10 = Some(co10);
    if !any {
        v.failed_stage = Some(PipelineStage::Inclusion);
        return Ok(v);
    }
    if map.is_fixed(x) {
        v.fixed_point = Some(x);
    } else {
        v.failed_stage = Some(PipelineStage::Oracle);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    fn alternating(len: usize) -> (MetricSpace, Vec<usize>) {
        let sp = MetricSpace::line(&[-1.0, 0.0, 1.0]).unwrap();
        let seq = (0..len).map(|i| if i % 2 == 0 { 2 } else { 0 }).collect();
        (sp, seq)
    }

    #[test]
    fn family_examples() {
        let sp = MetricSpace::line(&[0.0, 1.0, 2.0]).unwrap();
        let all = sp.all_points();
        let c = family_center(&sp, &[PointSet::singleton(1)], &all).unwrap();
        assert_eq!((c.radius, c.centers.as_slice()), (0.0, &[1][..]));

        let fam = [PointSet::new([0, 2]).unwrap(), PointSet::singleton(2)];
        let c = family_center(&sp, &fam, &all).unwrap();
        assert_eq!((c.radius, c.centers.as_slice()), (0.0, &[2][..]));
        assert_eq!(c.tail_radii, vec![1.0, 0.0]);

        let bad = [PointSet::singleton(2), PointSet::new([0, 2]).unwrap()];
        assert!(family_center(&sp, &bad, &all).is_err());
    }

    #[test]
    fn alternating_sequence() {
        let (sp, seq) = alternating(16);
        let c = asymptotic_center(&sp, &seq, &sp.all_points()).unwrap();
        assert_eq!(c.radius, 1.0);
        assert_eq!(c.centers.as_slice(), &[1]);

        let (sp, seq) = alternating(8);
        let r = regularity_check(&sp, &seq, &sp.all_points(), 0).unwrap();
        assert!(!r.regular);
        assert!(r.exhaustive);
        assert_eq!(r.minimizing_radius, 0.0);

        let sub = regular_subsequence(&sp, &seq, &sp.all_points(), 0).unwrap();
        assert_eq!(sub, vec![0, 2, 4, 6]);
    }

    #[test]
    fn constant_sequence() {
        let sp = MetricSpace::line(&[0.0, 1.0]).unwrap();
        let seq = vec![1; 5];
        let c = asymptotic_center(&sp, &seq, &sp.all_points()).unwrap();
        assert_eq!((c.radius, c.centers.as_slice()), (0.0, &[1][..]));
        let r = regularity_check(&sp, &seq, &sp.all_points(), 0).unwrap();
        assert!(r.regular);
        assert_eq!(r.radius, 0.0);
    }

    #[test]
    fn long_sequences_are_sampled() {
        let (sp, seq) = alternating(30);
        let r = regularity_check(&sp, &seq, &sp.all_points(), 50).unwrap();
        assert!(!r.exhaustive);
        assert!(!r.regular);
        let sub = regular_subsequence(&sp, &seq, &sp.all_points(), 50).unwrap();
        assert!(sub.iter().all(|&i| seq[i] == 2));
        assert_eq!(sub.len(), 15);
    }

    #[test]
    fn pipeline_examples() {
        let dyad = instances::dyad();
        let v = nonexpansive_solve(&dyad.map, dyad.point_at(1.0), 0.5, 64).unwrap();
        assert_eq!(v.fixed_point, Some(dyad.point_at(0.0)));
        assert_eq!(v.center.as_ref().unwrap().radius, 0.0);
        assert!(v.co12.as_ref().unwrap().holds);

        let cycle = instances::unit_two_cycle();
        let v = nonexpansive_solve(&cycle, 0, 0.5, 64).unwrap();
        assert_eq!(v.failed_stage, Some(PipelineStage::GapSequence));
        assert_eq!(v.limit.min_gap, 1.0);

        let sp = std::sync::Arc::new(MetricSpace::line(&[0.0, 1.0, 3.0]).unwrap());
        let id = MultiMap::from_table(sp, [(0, [0]), (1, [1]), (2, [2])]).unwrap();
        let v = nonexpansive_solve(&id, 2, 0.5, 64).unwrap();
        assert_eq!(v.fixed_point, Some(2));
        assert_eq!(v.trace.len(), 1);
    }
}
