//! Exhaustive checkers for the numbered fixed-point conditions.
//!
//! Every quantifier ranges over a finite set, so each checker is a direct
//! evaluation. Existential quantifiers record one witness per point, the
//! smallest index among all satisfiers, so reports are reproducible.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multimap::{GraphPair, MultiMap};
use crate::potential::{GraphMetric, Potential, ScaledMetric};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ConditionId {
    Co1,
    Co2,
    Co3,
    Co4,
    Co5,
    Co6,
    Co7,
    Co11,
    Co12,
    Co13,
    Co14,
    Co15,
    Co16,
    Co17,
    Co18,
    Co20,
    Co21,
}

impl ConditionId {
    pub const ALL: [ConditionId; 17] = [
        Self::Co1,
        Self::Co2,
        Self::Co3,
        Self::Co4,
        Self::Co5,
        Self::Co6,
        Self::Co7,
        Self::Co11,
        Self::Co12,
        Self::Co13,
        Self::Co14,
        Self::Co15,
        Self::Co16,
        Self::Co17,
        Self::Co18,
        Self::Co20,
        Self::Co21,
    ];

    pub fn number(self) -> u8 {
        match self {
            Self::Co1 => 1,
            Self::Co2 => 2,
            Self::Co3 => 3,
            Self::Co4 => 4,
            Self::Co5 => 5,
            Self::Co6 => 6,
            Self::Co7 => 7,
            Self::Co11 => 11,
            Self::Co12 => 12,
            Self::Co13 => 13,
            Self::Co14 => 14,
            Self::Co15 => 15,
            Self::Co16 => 16,
            Self::Co17 => 17,
            Self::Co18 => 18,
            Self::Co20 => 20,
            Self::Co21 => 21,
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "co{}", self.number())
    }
}

impl FromStr for ConditionId {
    type Err = Error;

    /// Accepts `co3`, `3` and `(3)`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let digits = t
            .strip_prefix("co")
            .or_else(|| t.strip_prefix('(').and_then(|r| r.strip_suffix(')')))
            .unwrap_or(t);
        let n: u8 = digits.parse().map_err(|_| Error::UnknownCondition(s.to_string()))?;
        Self::ALL
            .into_iter()
            .find(|id| id.number() == n)
            .ok_or_else(|| Error::UnknownCondition(s.to_string()))
    }
}

impl TryFrom<String> for ConditionId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ConditionId> for String {
    fn from(id: ConditionId) -> String {
        id.to_string()
    }
}

/// A finite sequence `x_n` with optional selections `y_n ∈ F(x_n)` and a
/// candidate center, as used by conditions (11) and (12).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceData {
    pub points: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen: Option<Vec<usize>>,
    pub center: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ConditionParams {
    pub alpha: f64,
    pub epsilon: f64,
    pub epsilon1: f64,
    pub k: f64,
    pub beta: f64,
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub potential: Option<Potential>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<ScaledMetric>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph_metric: Option<GraphMetric>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceData>,
}

impl ConditionParams {
    pub fn alpha(alpha: f64) -> Self {
        ConditionParams {
            alpha,
            ..Self::default()
        }
    }

    pub fn alpha_eps(alpha: f64, epsilon: f64) -> Self {
        ConditionParams {
            alpha,
            epsilon,
            ..Self::default()
        }
    }

    pub fn with_epsilon1(mut self, epsilon1: f64) -> Self {
        self.epsilon1 = epsilon1;
        self
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    pub fn with_potential(mut self, p: Potential) -> Self {
        self.potential = Some(p);
        self
    }

    pub fn with_metric(mut self, m: ScaledMetric) -> Self {
        self.metric = Some(m);
        self
    }

    pub fn with_graph_metric(mut self, g: GraphMetric) -> Self {
        self.graph_metric = Some(g);
        self
    }

    pub fn with_sequence(mut self, s: SequenceData) -> Self {
        self.sequence = Some(s);
        self
    }
}

/// Condition id plus parameters, the unit of scans and problem files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSpec {
    pub id: ConditionId,
    #[serde(flatten)]
    pub params: ConditionParams,
}

impl ConditionSpec {
    pub fn new(id: ConditionId, params: ConditionParams) -> Self {
        ConditionSpec { id, params }
    }
}

/// Choice made for an existential quantifier: at `at`, the checker picked `choice`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub at: Vec<usize>,
    pub choice: Vec<usize>,
}

/// The first point (or pair) at which a condition fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Falsifier {
    pub at: Vec<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: ConditionId,
    pub holds: bool,
    pub params: ConditionParams,
    pub witnesses: Vec<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub falsifier: Option<Falsifier>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ConditionReport {
    fn new(condition: ConditionId, params: &ConditionParams) -> Self {
        ConditionReport {
            condition,
            holds: true,
            params: params.clone(),
            witnesses: Vec::new(),
            falsifier: None,
            notes: Vec::new(),
        }
    }

    fn fail(mut self, at: Vec<usize>, reason: impl Into<String>) -> Self {
        self.holds = false;
        self.falsifier = Some(Falsifier {
            at,
            reason: reason.into(),
        });
        self
    }

    /// Records a failure, keeping the first one as the falsifier.
    fn mark(&mut self, at: Vec<usize>, reason: impl Into<String>) {
        self.holds = false;
        if self.falsifier.is_none() {
            self.falsifier = Some(Falsifier {
                at,
                reason: reason.into(),
            });
        }
    }

    fn witness(&mut self, at: Vec<usize>, choice: Vec<usize>) {
        self.witnesses.push(Witness { at, choice });
    }

    /// Witness recorded at `at`, if any.
    pub fn witness_at(&self, at: &[usize]) -> Option<&[usize]> {
        self.witnesses.iter().find(|w| w.at == at).map(|w| w.choice.as_slice())
    }
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParams(msg()))
    }
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    require(v >= 0.0 && v.is_finite(), || {
        format!("{name} = {v} must be a nonnegative real")
    })
}

fn validate(map: &MultiMap, id: ConditionId, p: &ConditionParams) -> Result<()> {
    use ConditionId::*;
    match id {
        Co1 | Co2 | Co4 | Co5 | Co7 => nonneg("alpha", p.alpha),
        Co3 => {
            nonneg("alpha", p.alpha)?;
            nonneg("epsilon", p.epsilon)?;
            require(p.alpha + p.epsilon < 1.0, || {
                format!("alpha + epsilon = {} must be < 1", p.alpha + p.epsilon)
            })
        }
        Co6 => Err(Error::InvalidParams("condition (6) is checked on traces".into())),
        Co11 | Co12 => {
            let s = p
                .sequence
                .as_ref()
                .ok_or_else(|| Error::InvalidParams("a sequence is required".into()))?;
            if !map.in_domain(s.center) {
                return Err(Error::NotInDomain(s.center));
            }
            if let Some(&x) = s.points.iter().find(|&&x| !map.in_domain(x)) {
                return Err(Error::NotInDomain(x));
            }
            if let Some(ch) = &s.chosen {
                require(ch.len() == s.points.len(), || "one selection per sequence point".into())?;
                for (&x, &y) in s.points.iter().zip(ch) {
                    require(map.value(x).is_some_and(|v| v.contains(y)), || {
                        format!("selection {y} is not in F({x})")
                    })?;
                }
            }
            require(!s.points.is_empty(), || "empty sequence".into())
        }
        Co13 => {
            p.potential
                .as_ref()
                .ok_or_else(|| Error::InvalidParams("a potential is required".into()))?
                .covers(map)?;
            p.metric
                .as_ref()
                .ok_or_else(|| Error::InvalidParams("a metric delta is required".into()))?
                .check(map.space())
        }
        Co14 => {
            nonneg("epsilon", p.epsilon)?;
            require(p.epsilon < 1.0, || "epsilon must be < 1".into())
        }
        Co15 => {
            nonneg("alpha", p.alpha)?;
            nonneg("epsilon", p.epsilon)?;
            require(p.alpha + p.epsilon <= 1.0, || "alpha + epsilon must be <= 1".into())
        }
        Co16 => {
            require(p.k > 0.0, || format!("k = {} must be positive", p.k))?;
            p.metric
                .as_ref()
                .ok_or_else(|| Error::InvalidParams("a metric delta is required".into()))?
                .check(map.space())
        }
        Co17 => require(p.epsilon1 > 0.0 && p.epsilon1 < p.epsilon, || {
            format!("epsilon1 = {} must lie in (0, epsilon = {})", p.epsilon1, p.epsilon)
        }),
        Co18 => {
            nonneg("alpha", p.alpha)?;
            nonneg("epsilon", p.epsilon)?;
            let s = p.alpha + p.epsilon;
            require(s > 0.0 && s < 1.0, || {
                format!("alpha + epsilon = {s} must lie in (0, 1)")
            })
        }
        Co20 => p
            .graph_metric
            .as_ref()
            .ok_or_else(|| Error::InvalidParams("a graph metric is required".into()))?
            .covers(map),
        Co21 => Ok(()),
    }
}

/// Evaluates condition `id` on `map` by exhaustive quantifier evaluation.
pub fn check_condition(map: &MultiMap, id: ConditionId, params: &ConditionParams) -> Result<ConditionReport> {
    validate(map, id, params)?;
    let report = ConditionReport::new(id, params);
    let c = Checker { map, p: params };
    Ok(match id {
        ConditionId::Co1 => c.co1(report)?,
        ConditionId::Co2 => c.co2(report),
        ConditionId::Co3 => c.co3(report),
        ConditionId::Co4 => c.co4(report),
        ConditionId::Co5 => c.co5(report),
        ConditionId::Co6 => unreachable!("rejected by validate"),
        ConditionId::Co7 => c.co7(report),
        ConditionId::Co11 => c.co11(report),
        ConditionId::Co12 => c.co12(report),
        ConditionId::Co13 => c.co13(report),
        ConditionId::Co14 => c.co14(report),
        ConditionId::Co15 => c.co15(report),
        ConditionId::Co16 => c.co16(report),
        ConditionId::Co17 => c.co17(report),
        ConditionId::Co18 => c.co18(report),
        ConditionId::Co20 => c.co20(report),
        ConditionId::Co21 => c.co21(report),
    })
}

pub fn check_spec(map: &MultiMap, spec: &ConditionSpec) -> Result<ConditionReport> {
    check_condition(map, spec.id, &spec.params)
}

struct Checker<'a> {
    map: &'a MultiMap,
    p: &'a ConditionParams,
}

impl Checker<'_> {
    fn tol(&self) -> f64 {
        self.map.tolerance()
    }

    fn d(&self, i: usize, j: usize) -> f64 {
        self.map.space().d(i, j)
    }

    fn gap(&self, x: usize) -> f64 {
        self.map.gap_of(x).expect("domain point")
    }

    /// Non-fixed domain points, ascending.
    fn moving(&self) -> impl Iterator<Item = usize> + '_ {
        self.map.domain().iter().filter(|&x| !self.map.is_fixed(x))
    }

    /// Domain points other than `x`.
    fn others(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.map.domain().iter().filter(move |&z| z != x)
    }

    fn co1(&self, mut r: ConditionReport) -> Result<ConditionReport> {
        let f = |x: usize| {
            let v = self.map.value(x).expect("domain point");
            (v.len() == 1).then(|| v.first())
        };
        let dom = self.map.domain().as_slice();
        if let Some(&x) = dom.iter().find(|&&x| f(x).is_none()) {
            return Err(Error::Precondition(format!(
                "condition (1) needs a single-valued map; F({x}) has several points"
            )));
        }
        for (a, &x) in dom.iter().enumerate() {
            for &y in &dom[a + 1..] {
                let lhs = self.d(f(x).unwrap(), f(y).unwrap());
                let rhs = self.p.alpha * self.d(x, y);
                if lhs > rhs + self.tol() {
                    return Ok(r.fail(vec![x, y], format!("d(f(y),f(x)) = {lhs} > {rhs}")));
                }
            }
        }
        r.notes.push("single-valued".into());
        Ok(r)
    }

    fn co2(&self, r: ConditionReport) -> ConditionReport {
        let sp = self.map.space();
        let rows: Vec<_> = self.map.rows().collect();
        let mut worst: Option<(f64, usize, usize, f64, f64)> = None;
        for (a, &(x, fx)) in rows.iter().enumerate() {
            for &(y, fy) in &rows[a + 1..] {
                let lhs = sp.hausdorff(fx, fy);
                let rhs = self.p.alpha * self.d(x, y);
                if lhs > rhs + self.tol() {
                    let ratio = lhs / self.d(x, y);
                    if worst.is_none_or(|w| ratio > w.0) {
                        worst = Some((ratio, x, y, lhs, rhs));
                    }
                }
            }
        }
        match worst {
            Some((ratio, x, y, lhs, rhs)) => {
                r.fail(vec![x, y], format!("D(F(x),F(y)) = {lhs} > {rhs} (ratio {ratio})"))
            }
            None => r,
        }
    }

    fn co3(&self, mut r: ConditionReport) -> ConditionReport {
        let (alpha, eps, tol) = (self.p.alpha, self.p.epsilon, self.tol());
        if alpha == 0.0 {
            r.notes
                .push("alpha=0 convention: the witness must itself have zero gap".into());
        }
        for (x, fx) in self.map.rows() {
            let gx = self.gap(x);
            let y = fx.iter().find(|&y| {
                self.map.gap_of(y).is_some_and(|gy| {
                    let step = alpha * self.d(y, x);
                    gy <= step + tol && step <= (alpha + eps) * gx + tol
                })
            });
            match y {
                Some(y) => r.witness(vec![x], vec![y]),
                None => r.mark(
                    vec![x],
                    format!("no y in F({x}) with d(F(y),y) <= a d(y,x) <= (a+e) {gx}"),
                ),
            }
        }
        r
    }

    fn co4(&self, mut r: ConditionReport) -> ConditionReport {
        let tol = self.tol();
        for (x, fx) in self.map.rows() {
            for y in fx.iter() {
                let Some(fy) = self.map.value(y) else {
                    r.mark(vec![x, y], format!("{y} in F({x}) lies outside the domain"));
                    continue;
                };
                let bound = self.p.alpha * self.d(y, x);
                match fy.iter().find(|&z| self.d(z, y) <= bound + tol) {
                    Some(z) => r.witness(vec![x, y], vec![z]),
                    None => r.mark(vec![x, y], format!("no z in F({y}) within {bound} of {y}")),
                }
            }
        }
        r
    }

    fn co5(&self, mut r: ConditionReport) -> ConditionReport {
        let tol = self.tol();
        for (x, fx) in self.map.rows() {
            let gx = self.gap(x);
            let y = fx.iter().find(|&y| {
                (self.d(y, x) - gx).abs() <= tol && self.map.gap_of(y).is_some_and(|gy| gy <= self.p.alpha * gx + tol)
            });
            match y {
                Some(y) => r.witness(vec![x], vec![y]),
                None => r.mark(vec![x], format!("no nearest y in F({x}) with d(F(y),y) <= a {gx}")),
            }
        }
        r
    }

    fn co7(&self, mut r: ConditionReport) -> ConditionReport {
        let tol = self.tol();
        for (x, fx) in self.map.rows() {
            let gx = self.gap(x);
            let y = fx
                .iter()
                .find(|&y| self.map.gap_of(y).is_some_and(|gy| gy <= self.p.alpha * gx + tol));
            match y {
                Some(y) => r.witness(vec![x], vec![y]),
                None => r.mark(vec![x], format!("no y in F({x}) with d(F(y),y) <= a {gx}")),
            }
        }
        r
    }

    fn co11(&self, mut r: ConditionReport) -> ConditionReport {
        let s = self.p.sequence.as_ref().expect("validated");
        let sp = self.map.space();
        let fc = self.map.value(s.center).expect("validated");
        for (n, &x) in s.points.iter().enumerate() {
            let bound = self.d(s.center, x);
            let ok = |y: usize| sp.point_set_dist(y, fc) <= bound + self.tol();
            let pick = match &s.chosen {
                Some(ch) => ok(ch[n]).then_some(ch[n]),
                None => self.map.value(x).expect("validated").iter().find(|&y| ok(y)),
            };
            match pick {
                Some(y) => r.witness(vec![n], vec![y]),
                None => r.mark(vec![n], format!("d(F(x),y_n) > d(x,x_n) = {bound}")),
            }
        }
        r
    }

    fn co12(&self, mut r: ConditionReport) -> ConditionReport {
        let s = self.p.sequence.as_ref().expect("validated");
        let sp = self.map.space();
        let fc = self.map.value(s.center).expect("validated");
        for (n, &x) in s.points.iter().enumerate() {
            let bound = self.d(s.center, x);
            let excess = sp.excess(self.map.value(x).expect("validated"), fc);
            if excess > bound + self.tol() {
                r.mark(
                    vec![n],
                    format!("F(x_n) leaves the closed {bound}-neighbourhood of F(x) by {excess}"),
                );
            }
        }
        r
    }

    fn co13(&self, mut r: ConditionReport) -> ConditionReport {
        let phi = self.p.potential.as_ref().expect("validated");
        let delta = self.p.metric.as_ref().expect("validated");
        let sp = self.map.space();
        for x in self.moving() {
            let px = phi.get(x).expect("covered");
            let z = self
                .others(x)
                .find(|&z| delta.d(sp, x, z) <= px - phi.get(z).expect("covered") + self.tol());
            match z {
                Some(z) => r.witness(vec![x], vec![z]),
                None => r.mark(vec![x], "no z != x with delta(x,z) <= phi(x) - phi(z)"),
            }
        }
        r
    }

    fn co14(&self, mut r: ConditionReport) -> ConditionReport {
        let eps = self.p.epsilon;
        for x in self.moving() {
            let gx = self.gap(x);
            let z = self.others(x).find(|&z| {
                (1.0 - eps) * self.d(x, z) <= gx - self.map.dist_to_value(z, x).expect("domain") + self.tol()
            });
            match z {
                Some(z) => r.witness(vec![x], vec![z]),
                None => r.mark(vec![x], "no z != x with (1-e) d(x,z) <= d(x,F(x)) - d(z,F(x))"),
            }
        }
        r
    }

    fn co15(&self, mut r: ConditionReport) -> ConditionReport {
        let c = 1.0 - self.p.alpha - self.p.epsilon;
        for x in self.moving() {
            let gx = self.gap(x);
            let z = self
                .others(x)
                .find(|&z| c * self.d(x, z) <= gx - self.gap(z) + self.tol());
            match z {
                Some(z) => r.witness(vec![x], vec![z]),
                None => r.mark(vec![x], format!("no z != x with {c} d(x,z) <= d(x,F(x)) - d(z,F(z))")),
            }
        }
        r
    }

    /// Existential search over `z ∈ X∖{x}, v ∈ F(z)` for each graph pair at a
    /// non-fixed point.
    fn over_moving_pairs(
        &self,
        mut r: ConditionReport,
        admissible: impl Fn(GraphPair, GraphPair) -> bool,
        what: &str,
    ) -> ConditionReport {
        for x in self.moving() {
            for t in self.map.value(x).expect("domain").iter() {
                let from = GraphPair::new(x, t);
                let hit = self.others(x).find_map(|z| {
                    self.map
                        .value(z)
                        .expect("domain")
                        .iter()
                        .find(|&v| admissible(from, GraphPair::new(z, v)))
                        .map(|v| (z, v))
                });
                match hit {
                    Some((z, v)) => r.witness(vec![x, t], vec![z, v]),
                    None => r.mark(vec![x, t], format!("no admissible (z,v) for {what}")),
                }
            }
        }
        r
    }

    fn co16(&self, r: ConditionReport) -> ConditionReport {
        let delta = self.p.metric.as_ref().expect("validated");
        let sp = self.map.space();
        let (k, tol) = (self.p.k, self.tol());
        self.over_moving_pairs(
            r,
            |p, q| {
                let drop = self.d(p.x, p.t) - self.d(q.x, q.t);
                delta.d(sp, p.x, q.x) <= drop + tol && delta.d(sp, p.t, q.t) <= k * drop + tol
            },
            "(16)",
        )
    }

    fn co17(&self, mut r: ConditionReport) -> ConditionReport {
        let e1 = self.p.epsilon1;
        for x in self.moving() {
            for t in self.map.value(x).expect("domain").iter() {
                let dxt = self.d(x, t);
                let z = self
                    .others(x)
                    .find(|&z| (1.0 - e1) * self.d(x, z) <= dxt - self.d(z, t) + self.tol());
                match z {
                    Some(z) => r.witness(vec![x, t], vec![z]),
                    None => r.mark(vec![x, t], "no z != x with (1-e1) d(x,z) <= d(x,t) - d(z,t)"),
                }
            }
        }
        r
    }

    fn co18(&self, r: ConditionReport) -> ConditionReport {
        let s = self.p.alpha + self.p.epsilon;
        let tol = self.tol();
        self.over_moving_pairs(
            r,
            |p, q| {
                let lhs = (1.0 - s) * self.d(p.x, q.x).max(self.d(p.t, q.t) / s);
                lhs <= self.d(p.x, p.t) - self.d(q.x, q.t) + tol
            },
            "(18)",
        )
    }

    fn co20(&self, r: ConditionReport) -> ConditionReport {
        let g = self.p.graph_metric.as_ref().expect("validated");
        let tol = self.tol();
        self.over_moving_pairs(
            r,
            |p, q| {
                let lhs = g.d(p, q).expect("covered");
                lhs <= self.d(p.x, p.t) - self.d(q.x, q.t) + tol
            },
            "(20)",
        )
    }

    fn co21(&self, mut r: ConditionReport) -> ConditionReport {
        for x in self.moving() {
            let gx = self.gap(x);
            match self.map.domain().iter().find(|&z| self.gap(z) + self.tol() < gx) {
                Some(z) => r.witness(vec![x], vec![z]),
                None => r.mark(vec![x], format!("no z with d(z,F(z)) < {gx}")),
            }
        }
        r
    }
}
