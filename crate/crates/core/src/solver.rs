//! Iteration engines for the sequence constructions and fixed-point extraction.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::conditions::{ConditionId, ConditionParams, ConditionReport, Falsifier, Witness};
use crate::error::{Error, Result};
use crate::multimap::MultiMap;

const MAX_ITER_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Minimal next gap among `y ∈ F(x)` with `α d(y,x) ≤ (α+ε) d(F(x),x)`.
    Co3,
    /// The nearest point of `F(x)`, the smallest gap among ties.
    Nearest,
    /// Minimal next gap over all of `F(x)`.
    Co7,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceStatus {
    Converged,
    MaxIter,
    SelectionFailed,
    /// Every admissible choice at the last point lies outside the domain.
    LeftDomain,
}

/// `points[n+1] = chosen[n]`; when the trace leaves the domain, `chosen` holds
/// one extra entry, the outside point that was selected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub rule: SelectionRule,
    pub params: ConditionParams,
    pub points: Vec<usize>,
    pub chosen: Vec<usize>,
    pub gaps: Vec<f64>,
    pub steps: Vec<f64>,
    pub status: TraceStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_at: Option<usize>,
}

/// One line of trace output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub n: usize,
    pub x: usize,
    pub y: Option<usize>,
    pub gap: f64,
    pub step: Option<f64>,
}

impl IterationTrace {
    fn start(map: &MultiMap, rule: SelectionRule, params: ConditionParams, x0: usize) -> Result<Self> {
        let g0 = map.gap(x0)?;
        Ok(IterationTrace {
            rule,
            params,
            points: vec![x0],
            chosen: Vec::new(),
            gaps: vec![g0],
            steps: Vec::new(),
            status: TraceStatus::MaxIter,
            failed_at: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> usize {
        *self.points.last().expect("traces start with x0")
    }

    /// Contraction factor the steps are expected to decay by.
    pub fn rate(&self) -> f64 {
        match self.rule {
            SelectionRule::Co3 => self.params.alpha + self.params.epsilon,
            SelectionRule::Nearest | SelectionRule::Co7 => self.params.alpha,
        }
    }

    /// The selection made at the final point when it lies outside the domain.
    pub fn exit_choice(&self) -> Option<usize> {
        (self.chosen.len() == self.points.len()).then(|| *self.chosen.last().expect("nonempty"))
    }

    pub fn records(&self) -> Vec<TraceRecord> {
        (0..self.points.len())
            .map(|i| TraceRecord {
                n: i + 1,
                x: self.points[i],
                y: self.chosen.get(i).copied(),
                gap: self.gaps[i],
                step: self.steps.get(i).copied(),
            })
            .collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in self.records() {
            serde_json::to_writer(&mut out, &r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in self.records() {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rechecks `y_n ∈ F(x_n)`, the chaining and the recorded step lengths.
    pub fn verify(&self, map: &MultiMap) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.gaps.len() != self.points.len() || self.steps.len() + 1 != self.points.len() {
            return bad("trace columns have inconsistent lengths".into());
        }
        for (n, &y) in self.chosen.iter().enumerate() {
            let x = self.points[n];
            if !map.values(x)?.contains(y) {
                return bad(format!("step {}: {y} is not in F({x})", n + 1));
            }
            if let Some(&next) = self.points.get(n + 1) {
                if next != y {
                    return bad(format!("step {}: next point {next} differs from choice {y}", n + 1));
                }
                if self.steps[n] != map.space().d(next, x) {
                    return bad(format!("step {}: recorded length differs from d(x_n+1, x_n)", n + 1));
                }
            }
        }
        Ok(())
    }

    /// First step index (0-based) breaking `steps[n] ≤ (α+ε)^n · gaps[0]/α + slack`.
    pub fn co3_decay_violation(&self, slack: f64) -> Option<usize> {
        let (q, a) = (self.rate(), self.params.alpha);
        self.steps
            .iter()
            .enumerate()
            .find(|&(n, &s)| s > q.powi(n as i32) * self.gaps[0] / a + slack)
            .map(|(n, _)| n)
    }

    /// First index breaking `gaps[n] ≤ α^n · gaps[0] + slack`.
    pub fn gap_decay_violation(&self, slack: f64) -> Option<usize> {
        let a = self.params.alpha;
        self.gaps
            .iter()
            .enumerate()
            .find(|&(n, &g)| g > a.powi(n as i32) * self.gaps[0] + slack)
            .map(|(n, _)| n)
    }
}

/// `10·⌈log(tol)/log(rate)⌉`, capped.
pub fn default_max_iter(rate: f64, tolerance: f64) -> usize {
    if !(rate > 0.0 && rate < 1.0) || tolerance <= 0.0 {
        return MAX_ITER_CAP;
    }
    let n = (tolerance.ln() / rate.ln()).ceil().max(1.0);
    ((10.0 * n) as usize).min(MAX_ITER_CAP)
}

enum Pick {
    Next(usize),
    Outside(usize),
    Fail,
}

fn run(
    map: &MultiMap,
    x0: usize,
    rule: SelectionRule,
    params: ConditionParams,
    max_iter: usize,
    mut pick: impl FnMut(usize, f64) -> Pick,
) -> Result<IterationTrace> {
    let mut trace = IterationTrace::start(map, rule, params, x0)?;
    let tol = map.tolerance();
    for _ in 0..max_iter {
        let x = trace.last();
        let gx = *trace.gaps.last().expect("nonempty");
        if gx <= tol {
            trace.status = TraceStatus::Converged;
            return Ok(trace);
        }
        match pick(x, gx) {
            Pick::Next(y) => {
                let step = map.space().d(y, x);
                trace.chosen.push(y);
                trace.points.push(y);
                trace.gaps.push(map.gap(y)?);
                trace.steps.push(step);
                if step <= tol {
                    trace.status = TraceStatus::Converged;
                    return Ok(trace);
                }
            }
            Pick::Outside(y) => {
                trace.chosen.push(y);
                trace.status = TraceStatus::LeftDomain;
                trace.failed_at = Some(x);
                return Ok(trace);
            }
            Pick::Fail => {
                trace.status = TraceStatus::SelectionFailed;
                trace.failed_at = Some(x);
                return Ok(trace);
            }
        }
    }
    if *trace.gaps.last().expect("nonempty") <= tol {
        trace.status = TraceStatus::Converged;
    }
    Ok(trace)
}

/// Smallest-gap domain point of `cands`, ties to the smallest index.
fn min_gap(map: &MultiMap, cands: impl Iterator<Item = usize>) -> Option<(usize, f64)> {
    cands
        .filter_map(|y| map.gap_of(y).map(|g| (y, g)))
        .fold(None, |best, (y, g)| match best {
            Some((_, bg)) if bg <= g => best,
            _ => Some((y, g)),
        })
}

pub fn iterate_co3(
    map: &MultiMap,
    x0: usize,
    alpha: f64,
    epsilon: f64,
    max_iter: Option<usize>,
) -> Result<IterationTrace> {
    if !(alpha > 0.0 && epsilon >= 0.0 && alpha + epsilon < 1.0) {
        return Err(Error::InvalidParams(format!(
            "need alpha > 0, epsilon >= 0 and alpha + epsilon < 1, got {alpha} and {epsilon}"
        )));
    }
    let tol = map.tolerance();
    let sp = map.space();
    let max_iter = max_iter.unwrap_or_else(|| default_max_iter(alpha + epsilon, tol));
    run(
        map,
        x0,
        SelectionRule::Co3,
        ConditionParams::alpha_eps(alpha, epsilon),
        max_iter,
        |x, gx| {
            let fx = map.value(x).expect("trace stays in the domain");
            let admissible: Vec<usize> = fx
                .iter()
                .filter(|&y| alpha * sp.d(y, x) <= (alpha + epsilon) * gx + tol)
                .collect();
            let full = admissible
                .iter()
                .any(|&y| map.gap_of(y).is_some_and(|gy| gy <= alpha * sp.d(y, x) + tol));
            match min_gap(map, admissible.iter().copied()) {
                Some((y, _)) if full => Pick::Next(y),
                None if !admissible.is_empty() => Pick::Outside(admissible[0]),
                _ => Pick::Fail,
            }
        },
    )
}

pub fn iterate_nearest(map: &MultiMap, x0: usize, alpha: f64, max_iter: Option<usize>) -> Result<IterationTrace> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParams(format!("alpha = {alpha} must lie in [0, 1)")));
    }
    let tol = map.tolerance();
    let max_iter = max_iter.unwrap_or_else(|| default_max_iter(alpha, tol));
    run(
        map,
        x0,
        SelectionRule::Nearest,
        ConditionParams::alpha(alpha),
        max_iter,
        |x, gx| {
            // among equally near points, the one with the smallest gap
            let nearest = map
                .space()
                .nearest_points(x, map.value(x).expect("trace stays in the domain"));
            match min_gap(map, nearest.iter()) {
                None => Pick::Outside(nearest.first()),
                Some((y, gy)) if gy <= alpha * gx + tol => Pick::Next(y),
                Some(_) => Pick::Fail,
            }
        },
    )
}

pub fn iterate_co7(map: &MultiMap, x0: usize, alpha: f64, max_iter: Option<usize>) -> Result<IterationTrace> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParams(format!("alpha = {alpha} must lie in [0, 1)")));
    }
    let tol = map.tolerance();
    let max_iter = max_iter.unwrap_or_else(|| default_max_iter(alpha, tol));
    run(
        map,
        x0,
        SelectionRule::Co7,
        ConditionParams::alpha(alpha),
        max_iter,
        |x, gx| {
            let fx = map.value(x).expect("trace stays in the domain");
            match min_gap(map, fx.iter()) {
                Some((y, gy)) if gy <= alpha * gx + tol => Pick::Next(y),
                Some(_) => Pick::Fail,
                None => Pick::Outside(fx.first()),
            }
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitRoute {
    /// Geometrically decaying steps; the limit is found near the last point.
    Cauchy,
    /// The smallest-gap point of the trace.
    Cluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitVerdict {
    pub fixed_point: Option<usize>,
    pub route: Option<LimitRoute>,
    /// Whether the step ratios passed the decay test.
    pub cauchy: bool,
    pub min_gap: f64,
    /// `x ∈ F(x)` rechecked by membership.
    pub confirmed: bool,
}

/// Whether consecutive step ratios stay below the trace's rate.
pub fn steps_decay(trace: &IterationTrace, tolerance: f64) -> bool {
    let q = trace.rate();
    trace
        .steps
        .windows(2)
        .all(|w| w[0] <= tolerance || w[1] <= (q + tolerance) * w[0])
}

/// Domain points within the geometric tail radius of the last point, i.e.
/// the places a Cauchy trace could still reach.
pub fn tail_candidates(map: &MultiMap, trace: &IterationTrace) -> Vec<usize> {
    let last = trace.last();
    let q = trace.rate().min(1.0 - 1e-12);
    let sp = map.space();
    let exit = match (trace.exit_choice(), trace.steps.last()) {
        (Some(y), _) => sp.d(y, last),
        (None, Some(&s)) if trace.status != TraceStatus::Converged => s * q,
        _ => 0.0,
    };
    let radius = exit / (1.0 - q) + map.tolerance();
    map.domain().iter().filter(|&z| sp.d(z, last) <= radius).collect()
}

fn best_by_gap(map: &MultiMap, cands: &[usize], anchor: usize) -> Option<(usize, f64)> {
    let sp = map.space();
    cands
        .iter()
        .filter_map(|&z| map.gap_of(z).map(|g| (z, g)))
        .min_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then(sp.d(a.0, anchor).total_cmp(&sp.d(b.0, anchor)))
                .then(a.0.cmp(&b.0))
        })
}

pub fn resolve_limit(map: &MultiMap, trace: &IterationTrace) -> Result<LimitVerdict> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let tol = map.tolerance();
    let cauchy = steps_decay(trace, tol);
    let trace_min = trace.gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let mut min_gap = trace_min;
    if cauchy {
        if let Some((p, g)) = best_by_gap(map, &tail_candidates(map, trace), trace.last()) {
            min_gap = min_gap.min(g);
            if g <= tol {
                return Ok(LimitVerdict {
                    fixed_point: Some(p),
                    route: Some(LimitRoute::Cauchy),
                    cauchy,
                    min_gap: g,
                    confirmed: map.is_fixed(p),
                });
            }
        }
    }
    let (p, g) = best_by_gap(map, &trace.points, trace.last()).expect("trace points lie in the domain");
    let found = g <= tol;
    Ok(LimitVerdict {
        fixed_point: found.then_some(p),
        route: found.then_some(LimitRoute::Cluster),
        cauchy,
        min_gap: if found { g } else { min_gap },
        confirmed: found && map.is_fixed(p),
    })
}

/// Condition (6) along a trace: if the gaps tend to zero, the limit has gap zero.
///
/// Gaps "tend to zero" when the last gap is within tolerance or the last
/// gap ratios stay below the trace rate.
pub fn check_co6_trace(map: &MultiMap, trace: &IterationTrace) -> Result<ConditionReport> {
    if trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if let Some(&x) = trace.points.iter().find(|&&x| !map.in_domain(x)) {
        return Err(Error::NotInDomain(x));
    }
    let tol = map.tolerance();
    if !steps_decay(trace, tol) {
        return Err(Error::NotConverged);
    }
    let q = trace.rate();
    let g = &trace.gaps;
    let last = *g.last().expect("nonempty");
    let tail = &g[g.len().saturating_sub(4)..];
    let vanishing = last <= tol || (tail.len() >= 2 && tail.windows(2).all(|w| w[1] <= (q + tol) * w[0]));
    let mut report = ConditionReport {
        condition: ConditionId::Co6,
        holds: true,
        params: trace.params.clone(),
        witnesses: Vec::new(),
        falsifier: None,
        notes: Vec::new(),
    };
    if !vanishing {
        report
            .notes
            .push("gaps do not tend to zero; the condition holds vacuously".into());
        return Ok(report);
    }
    let (limit, gl) = best_by_gap(map, &tail_candidates(map, trace), trace.last()).expect("last point is a candidate");
    report.witnesses.push(Witness {
        at: vec![trace.last()],
        choice: vec![limit],
    });
    if gl > tol {
        report.holds = false;
        report.falsifier = Some(Falsifier {
            at: vec![limit],
            reason: format!("gaps vanish along the trace but the limit has gap {gl}"),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;
    use std::sync::Arc;

    #[test]
    fn dyad_halving_trace() {
        let dyad = instances::dyad();
        let one = dyad.point_at(1.0);
        let t = iterate_co3(&dyad.map, one, 0.5, 0.1, None).unwrap();
        t.verify(&dyad.map).unwrap();
        assert_eq!(t.len(), 21);
        for (n, &s) in t.steps.iter().enumerate() {
            assert_eq!(s, 0.5f64.powi(n as i32 + 1));
        }
        // 2^-20 maps to 2^-21, which is not in the domain
        assert_eq!(t.status, TraceStatus::LeftDomain);
        let v = resolve_limit(&dyad.map, &t).unwrap();
        assert_eq!(v.fixed_point, Some(dyad.point_at(0.0)));
        assert_eq!(v.route, Some(LimitRoute::Cauchy));
        assert!(v.confirmed);

        let n = iterate_nearest(&dyad.map, one, 0.5, None).unwrap();
        assert_eq!(n.points, t.points);
        let c = iterate_co7(&dyad.map, one, 0.5, None).unwrap();
        assert_eq!(c.points, t.points);
        assert_eq!(c.gap_decay_violation(1e-12), None);
    }

    #[test]
    fn fixed_start_is_a_single_point() {
        let m = instances::line_three();
        let t = iterate_co3(&m, 0, 0.5, 0.1, None).unwrap();
        assert_eq!(t.points, vec![0]);
        assert_eq!(t.status, TraceStatus::Converged);
    }

    #[test]
    fn line_three_jumps_to_zero() {
        let m = instances::line_three();
        let t = iterate_co3(&m, 1, 0.5, 0.1, None).unwrap();
        assert_eq!(t.points, vec![1, 0]);
        assert_eq!(t.status, TraceStatus::Converged);
        assert_eq!(resolve_limit(&m, &t).unwrap().fixed_point, Some(0));
    }

    #[test]
    fn nearest_selection_can_fail() {
        // F(0) = {1.9, 4}: the nearest value 1.9 has gap 1.9, the far one gap 0.
        let sp = Arc::new(crate::MetricSpace::line(&[0.0, 1.0, 1.9, 4.0]).unwrap());
        let m = MultiMap::from_table(sp, [(0, vec![2, 3]), (1, vec![0]), (2, vec![0]), (3, vec![3])]).unwrap();
        let t = iterate_nearest(&m, 0, 0.5, None).unwrap();
        assert_eq!(t.status, TraceStatus::SelectionFailed);
        assert_eq!(t.failed_at, Some(0));
        let t = iterate_co7(&m, 0, 0.5, None).unwrap();
        assert_eq!(t.points, vec![0, 3]);
    }

    #[test]
    fn shrinking_gaps_without_cauchy_steps() {
        let m = instances::shrinking_gap_chain();
        let t = iterate_co7(&m, 0, 0.5, None).unwrap();
        assert_eq!(t.points, vec![0, 3, 5]);
        for (g, want) in t.gaps.iter().zip([0.8, 0.4, 0.0]) {
            assert!((g - want).abs() < 1e-12);
        }
        assert_eq!(t.gap_decay_violation(1e-9), None);
        let v = resolve_limit(&m, &t).unwrap();
        assert!(!v.cauchy);
        assert_eq!(v.route, Some(LimitRoute::Cluster));
        assert_eq!(v.fixed_point, Some(5));
    }

    #[test]
    fn two_cycle_has_no_limit() {
        let m = instances::unit_two_cycle();
        let t = iterate_co7(&m, 0, 0.5, None).unwrap();
        assert_eq!(t.status, TraceStatus::SelectionFailed);
        let v = resolve_limit(&m, &t).unwrap();
        assert_eq!(v.fixed_point, None);
        assert_eq!(v.min_gap, 1.0);
    }

    #[test]
    fn co6_on_traces() {
        let dyad = instances::dyad();
        let t = iterate_co3(&dyad.map, dyad.point_at(1.0), 0.5, 0.1, None).unwrap();
        let r = check_co6_trace(&dyad.map, &t).unwrap();
        assert!(r.holds);
        assert_eq!(r.witnesses[0].choice, vec![dyad.point_at(0.0)]);

        let m = instances::unit_two_cycle();
        let t = iterate_co7(&m, 0, 0.5, None).unwrap();
        let r = check_co6_trace(&m, &t).unwrap();
        assert!(r.holds);
        assert!(!r.notes.is_empty());
    }

    #[test]
    fn trace_emission_formats() {
        let m = instances::line_three();
        let t = iterate_co3(&m, 1, 0.5, 0.1, None).unwrap();
        let mut jsonl = Vec::new();
        t.write_jsonl(&mut jsonl).unwrap();
        let text = String::from_utf8(jsonl).unwrap();
        assert_eq!(
            text,
            "{\"n\":1,\"x\":1,\"y\":0,\"gap\":1.0,\"step\":1.0}\n{\"n\":2,\"x\":0,\"y\":null,\"gap\":0.0,\"step\":null}\n"
        );
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "n,x,y,gap,step\n1,1,0,1.0,1.0\n2,0,,0.0,\n"
        );
    }

    #[test]
    fn default_iteration_budget() {
        assert_eq!(default_max_iter(0.5, 1e-9), 300);
        assert_eq!(default_max_iter(1.0, 1e-9), 100_000);
    }
}
