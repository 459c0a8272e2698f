//! Greedy strict descents standing in for the maximal-element arguments, and
//! the step builders that turn contraction data into descent parameters.
//!
//! Every move must lower the potential by more than the space tolerance, so a
//! descent on a finite set always terminates.

use serde::{Deserialize, Serialize};

use crate::conditions::{check_condition, ConditionId, ConditionParams, ConditionReport, Falsifier, Witness};
use crate::error::{Error, Result};
use crate::multimap::{GraphPair, MultiMap};
use crate::potential::{GraphMetric, Potential, ScaledMetric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescentOutcome {
    FixedPoint,
    /// Stuck at a non-fixed point: the hypothesis fails there.
    Violation,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentMove<N> {
    pub step: usize,
    pub from: N,
    pub to: N,
    pub potential_before: f64,
    pub potential_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentVerdict<N> {
    pub outcome: DescentOutcome,
    pub start: N,
    pub end: N,
    pub moves: Vec<DescentMove<N>>,
}

impl<N: Copy> DescentVerdict<N> {
    fn run(
        start: N,
        max_iter: usize,
        potential: impl Fn(N) -> f64,
        is_done: impl Fn(N) -> bool,
        next: impl Fn(N) -> Option<N>,
    ) -> Self {
        let mut at = start;
        let mut moves = Vec::new();
        loop {
            if is_done(at) {
                return DescentVerdict {
                    outcome: DescentOutcome::FixedPoint,
                    start,
                    end: at,
                    moves,
                };
            }
            if moves.len() >= max_iter {
                return DescentVerdict {
                    outcome: DescentOutcome::MaxIter,
                    start,
                    end: at,
                    moves,
                };
            }
            let Some(to) = next(at) else {
                return DescentVerdict {
                    outcome: DescentOutcome::Violation,
                    start,
                    end: at,
                    moves,
                };
            };
            moves.push(DescentMove {
                step: moves.len() + 1,
                from: at,
                to,
                potential_before: potential(at),
                potential_after: potential(to),
            });
            at = to;
        }
    }

    pub fn succeeded(&self) -> bool {
        self.outcome == DescentOutcome::FixedPoint
    }

    pub fn path(&self) -> Vec<N> {
        std::iter::once(self.start)
            .chain(self.moves.iter().map(|m| m.to))
            .collect()
    }
}

fn default_budget(map: &MultiMap, max_iter: Option<usize>) -> usize {
    max_iter.unwrap_or_else(|| map.graph().len() + map.domain().len())
}

/// Descent on a potential: from a non-fixed `x`, move to the `z ≠ x` with
/// `δ(x,z) ≤ φ(x) − φ(z)` of smallest potential.
pub fn caristi_descent(
    map: &MultiMap,
    phi: &Potential,
    delta: &ScaledMetric,
    x0: usize,
    max_iter: Option<usize>,
) -> Result<DescentVerdict<usize>> {
    phi.covers(map)?;
    delta.check(map.space())?;
    map.values(x0)?;
    let tol = map.tolerance();
    let sp = map.space();
    let p = |x: usize| phi.get(x).expect("covered");
    Ok(DescentVerdict::run(
        x0,
        default_budget(map, max_iter),
        p,
        |x| map.is_fixed(x),
        |x| {
            map.domain()
                .iter()
                .filter(|&z| z != x && p(x) - p(z) > tol && delta.d(sp, x, z) <= p(x) - p(z) + tol)
                .min_by(|&a, &b| p(a).total_cmp(&p(b)).then(a.cmp(&b)))
        },
    ))
}

/// Orbit of a single-valued self-map `g` under `d(x,g(x)) ≤ φ(x) − φ(g(x))`:
/// the move is forced to `g(x)`.
pub fn caristi_orbit(
    map: &MultiMap,
    phi: &Potential,
    x0: usize,
    max_iter: Option<usize>,
) -> Result<DescentVerdict<usize>> {
    phi.covers(map)?;
    map.values(x0)?;
    if let Some((x, _)) = map.rows().find(|(_, v)| v.len() != 1) {
        return Err(Error::Precondition(format!("F({x}) is not a single point")));
    }
    let tol = map.tolerance();
    let sp = map.space();
    let p = |x: usize| phi.get(x).expect("covered");
    let g = |x: usize| map.value(x).expect("domain").first();
    Ok(DescentVerdict::run(
        x0,
        default_budget(map, max_iter),
        p,
        |x| map.is_fixed(x),
        |x| {
            let y = g(x);
            (map.in_domain(y) && p(x) - p(y) > tol && sp.d(x, y) <= p(x) - p(y) + tol).then_some(y)
        },
    ))
}

/// Caristi descent on the gap function.
pub fn gap_descent(
    map: &MultiMap,
    delta: &ScaledMetric,
    x0: usize,
    max_iter: Option<usize>,
) -> Result<DescentVerdict<usize>> {
    caristi_descent(map, &Potential::gap(map), delta, x0, max_iter)
}

/// Checks `δ(x_n, x_n+1) ≤ φ(x_n) − φ(x_n+1)` along the moves; returns the
/// first step that breaks it.
pub fn telescoping_violation(map: &MultiMap, delta: &ScaledMetric, verdict: &DescentVerdict<usize>) -> Option<usize> {
    let tol = map.tolerance();
    verdict
        .moves
        .iter()
        .find(|m| delta.d(map.space(), m.from, m.to) > m.potential_before - m.potential_after + tol)
        .map(|m| m.step)
}

fn require_contraction(map: &MultiMap, alpha: f64) -> Result<ConditionReport> {
    let co2 = check_condition(map, ConditionId::Co2, &ConditionParams::alpha(alpha))?;
    if let Some(f) = &co2.falsifier {
        return Err(Error::Precondition(format!(
            "not an {alpha}-contraction at the pair {:?}: {}",
            f.at, f.reason
        )));
    }
    Ok(co2)
}

/// Condition (15) at coefficient `1−α−ε` derived from (14) witnesses, with
/// the descent metric it feeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCertificate {
    pub report: ConditionReport,
    pub contraction: ConditionReport,
    pub delta: ScaledMetric,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

fn expect_report(r: &ConditionReport, id: ConditionId) -> Result<()> {
    if r.condition != id {
        return Err(Error::InvalidParams(format!(
            "expected a {id} report, got {}",
            r.condition
        )));
    }
    Ok(())
}

pub fn build_co15_step(map: &MultiMap, alpha: f64, epsilon: f64, co14: &ConditionReport) -> Result<StepCertificate> {
    expect_report(co14, ConditionId::Co14)?;
    if !(alpha >= 0.0 && epsilon >= 0.0 && alpha + epsilon < 1.0) {
        return Err(Error::InvalidParams(format!(
            "alpha + epsilon = {} must be < 1",
            alpha + epsilon
        )));
    }
    let contraction = require_contraction(map, alpha)?;
    let tol = map.tolerance();
    let sp = map.space();
    let c = 1.0 - alpha - epsilon;
    let mut report = ConditionReport {
        condition: ConditionId::Co15,
        holds: true,
        params: ConditionParams::alpha_eps(alpha, epsilon),
        witnesses: Vec::new(),
        falsifier: None,
        notes: Vec::new(),
    };
    // Every non-fixed point is examined; the first failure is the falsifier.
    for x in map.domain().iter().filter(|&x| !map.is_fixed(x)) {
        let gx = map.gap_of(x).expect("domain");
        let failure = match co14.witness_at(&[x]) {
            Some(&[z]) => {
                let co14_ok =
                    z != x && map.in_domain(z) && (1.0 - epsilon) * sp.d(x, z) <= gx - map.dist_to_value(z, x)? + tol;
                if !co14_ok {
                    Some(format!("{z} is not a (14) witness"))
                } else if c * sp.d(x, z) > gx - map.gap_of(z).expect("domain") + tol {
                    Some(format!("(15) fails for the witness {z}"))
                } else {
                    report.witnesses.push(Witness {
                        at: vec![x],
                        choice: vec![z],
                    });
                    None
                }
            }
            _ => Some("(14) has no witness here".into()),
        };
        if let (Some(reason), None) = (failure, &report.falsifier) {
            report.falsifier = Some(Falsifier { at: vec![x], reason });
        }
    }
    report.holds = report.falsifier.is_none();
    Ok(StepCertificate {
        report,
        contraction,
        delta: ScaledMetric::Scaled { scale: c },
        k: None,
    })
}

/// Builds (18) from (17) witnesses: for each graph pair `(x,t)` at a non-fixed
/// `x`, takes the nearest `v ∈ F(z)` to `t`, checks `d(t,v) ≤ (α+ε−ε₁) d(x,z)`
/// and then (18). The result parameterizes the graph descents with
/// `δ = (1−α−ε) d` and `k = α+ε`.
pub fn build_co18_step(
    map: &MultiMap,
    alpha: f64,
    epsilon: f64,
    epsilon1: f64,
    co17: &ConditionReport,
) -> Result<StepCertificate> {
    expect_report(co17, ConditionId::Co17)?;
    let s = alpha + epsilon;
    if !(alpha >= 0.0 && s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParams(format!(
            "alpha + epsilon = {s} must lie in (0, 1)"
        )));
    }
    if !(epsilon1 > 0.0 && epsilon1 < epsilon) {
        return Err(Error::InvalidParams(format!(
            "epsilon1 = {epsilon1} must lie in (0, {epsilon})"
        )));
    }
    let contraction = require_contraction(map, alpha)?;
    let tol = map.tolerance();
    let sp = map.space();
    let c = 1.0 - s;
    let mut report = ConditionReport {
        condition: ConditionId::Co18,
        holds: true,
        params: ConditionParams::alpha_eps(alpha, epsilon).with_epsilon1(epsilon1),
        witnesses: Vec::new(),
        falsifier: None,
        notes: Vec::new(),
    };
    for p in map.graph().into_iter().filter(|p| !map.is_fixed(p.x)) {
        let (x, t) = (p.x, p.t);
        let mut fail = |reason: String| {
            report.falsifier.get_or_insert(Falsifier { at: vec![x, t], reason });
        };
        let z = match co17.witness_at(&[x, t]) {
            Some(&[z]) if z != x && map.in_domain(z) => z,
            _ => {
                fail("(17) has no witness here".into());
                continue;
            }
        };
        if (1.0 - epsilon1) * sp.d(x, z) > sp.d(x, t) - sp.d(z, t) + tol {
            fail(format!("{z} is not a (17) witness"));
            continue;
        }
        let fz = map.value(z).expect("domain");
        let v = sp.nearest_point(t, fz);
        let bound = (s - epsilon1) * sp.d(x, z);
        if sp.d(t, v) > bound + tol {
            fail(format!(
                "(19) unrealizable: d(t,F(z)) = {} exceeds {bound}; the instance is rejected",
                sp.d(t, v)
            ));
            continue;
        }
        let lhs = c * sp.d(x, z).max(sp.d(t, v) / s);
        let rhs = sp.d(x, t) - sp.d(z, v);
        if lhs > rhs + tol {
            fail(format!("(18) fails: {lhs} > {rhs}"));
            continue;
        }
        report.witnesses.push(Witness {
            at: vec![x, t],
            choice: vec![z, v],
        });
    }
    report.holds = report.falsifier.is_none();
    Ok(StepCertificate {
        report,
        contraction,
        delta: ScaledMetric::Scaled { scale: c },
        k: Some(s),
    })
}

fn check_start(map: &MultiMap, start: GraphPair) -> Result<()> {
    if map.contains_pair(start) {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "({}, {}) is not a graph pair",
            start.x, start.t
        )))
    }
}

/// Smallest `d(z,v)` among admissible pairs, ties to the smallest pair.
fn best_pair(map: &MultiMap, from: GraphPair, admissible: impl Fn(GraphPair, f64) -> bool) -> Option<GraphPair> {
    let sp = map.space();
    let tol = map.tolerance();
    let here = sp.d(from.x, from.t);
    map.graph()
        .into_iter()
        .filter(|q| q.x != from.x)
        .filter(|q| {
            let drop = here - sp.d(q.x, q.t);
            drop > tol && admissible(*q, drop)
        })
        .min_by(|a, b| sp.d(a.x, a.t).total_cmp(&sp.d(b.x, b.t)).then(a.cmp(b)))
}

/// Descent on graph pairs under (16): `δ(x,z) ≤ d(x,t) − d(z,v)` and
/// `δ(t,v) ≤ k (d(x,t) − d(z,v))`.
pub fn graph_descent_co16(
    map: &MultiMap,
    delta: &ScaledMetric,
    k: f64,
    start: GraphPair,
    max_iter: Option<usize>,
) -> Result<DescentVerdict<GraphPair>> {
    if !(k > 0.0) {
        return Err(Error::InvalidParams(format!("k = {k} must be positive")));
    }
    delta.check(map.space())?;
    check_start(map, start)?;
    let tol = map.tolerance();
    let sp = map.space();
    Ok(DescentVerdict::run(
        start,
        default_budget(map, max_iter),
        |p| sp.d(p.x, p.t),
        |p| map.is_fixed(p.x),
        |p| {
            best_pair(map, p, |q, drop| {
                delta.d(sp, p.x, q.x) <= drop + tol && delta.d(sp, p.t, q.t) <= k * drop + tol
            })
        },
    ))
}

/// Descent on graph pairs under (20): `δ((x,t),(z,v)) ≤ d(x,t) − d(z,v)`.
pub fn pair_descent_co20(
    map: &MultiMap,
    metric: &GraphMetric,
    start: GraphPair,
    max_iter: Option<usize>,
) -> Result<DescentVerdict<GraphPair>> {
    metric.covers(map)?;
    check_start(map, start)?;
    let tol = map.tolerance();
    let sp = map.space();
    Ok(DescentVerdict::run(
        start,
        default_budget(map, max_iter),
        |p| sp.d(p.x, p.t),
        |p| map.is_fixed(p.x),
        |p| best_pair(map, p, |q, drop| metric.d(p, q).expect("covered") <= drop + tol),
    ))
}
