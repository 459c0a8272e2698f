//! Inward sets, their metric generalization, the segment witness lemma, and
//! the fixed-point pipelines built on them.

use serde::{Deserialize, Serialize};

use crate::conditions::{check_condition, ConditionId, ConditionParams, ConditionReport};
use crate::error::{Error, Result};
use crate::metric::{MetricSpace, PointSet};
use crate::multimap::MultiMap;

/// Largest `λ` accepted by the normed inward test.
pub const LAMBDA_MAX: f64 = 1e6;

/// Deepest level `j` of the geometric segment samples `x + 2^-j (t − x)`.
const SEGMENT_DEPTH: i32 = 40;

/// `{2^-1, …, 2^-20}`.
pub fn default_schedule() -> Vec<f64> {
    (1..=20).map(|j| 0.5f64.powi(j)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormedInward {
    pub member: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<usize>,
}

fn require_in(set: &PointSet, x: usize) -> Result<()> {
    if set.contains(x) {
        Ok(())
    } else {
        Err(Error::NotInDomain(x))
    }
}

/// Whether `t = x + λ(z − x)` for some `z ∈ X` and `λ ∈ [1, λ_max]`.
///
/// For each `z` the best `λ` is the least-squares coefficient of `t − x` on
/// `z − x`; the match is accepted when the residual is within tolerance.
/// Among matches the smallest `λ` wins, then the smallest index.
pub fn inward_membership_normed(space: &MetricSpace, set: &PointSet, x: usize, t: &[f64]) -> Result<NormedInward> {
    let norm = space
        .norm()
        .ok_or_else(|| Error::Unsupported("the inward set needs an embedded space".into()))?;
    require_in(set, x)?;
    let px = space.coords(x).expect("embedded");
    if t.len() != px.len() {
        return Err(Error::InvalidParams(format!(
            "t has {} coordinates, expected {}",
            t.len(),
            px.len()
        )));
    }
    let tol = space.tolerance();
    let v: Vec<f64> = t.iter().zip(px).map(|(a, b)| a - b).collect();
    if norm.length(&v) <= tol {
        return Ok(NormedInward {
            member: true,
            lambda: Some(1.0),
            z: Some(x),
        });
    }
    let mut best: Option<(f64, usize)> = None;
    for z in set.iter().filter(|&z| z != x) {
        let u: Vec<f64> = space
            .coords(z)
            .expect("embedded")
            .iter()
            .zip(px)
            .map(|(a, b)| a - b)
            .collect();
        let uu: f64 = u.iter().map(|c| c * c).sum();
        let lambda = v.iter().zip(&u).map(|(a, b)| a * b).sum::<f64>() / uu;
        let lambda_ok = lambda >= 1.0 - tol / uu.sqrt() && lambda <= LAMBDA_MAX;
        let residual: Vec<f64> = v.iter().zip(&u).map(|(a, b)| a - lambda * b).collect();
        if lambda_ok && norm.length(&residual) <= tol && best.is_none_or(|b| lambda < b.0 - tol) {
            best = Some((lambda.max(1.0), z));
        }
    }
    Ok(match best {
        Some((lambda, z)) => NormedInward {
            member: true,
            lambda: Some(lambda),
            z: Some(z),
        },
        None => NormedInward {
            member: false,
            lambda: None,
            z: None,
        },
    })
}

/// A point of the segment `(x, t]`: a universe point, or a location in the
/// ambient space of an embedded universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentPoint {
    Point(usize),
    Coords(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaWitness {
    pub beta: f64,
    pub s: SegmentPoint,
    pub z: usize,
    /// `d(z,s) / d(x,s)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InwardVerdict {
    /// Some point of `X` lies on `(x, t]`, which settles every `β > 0`.
    Member,
    NonMember {
        beta: f64,
    },
    /// Every scheduled `β` passed; smaller ones were not tried.
    NumericalMember,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InwardCertificate {
    pub x: usize,
    pub t: usize,
    pub betas: Vec<f64>,
    pub per_beta: Vec<BetaWitness>,
    pub verdict: InwardVerdict,
}

impl InwardCertificate {
    pub fn is_member(&self) -> bool {
        !matches!(self.verdict, InwardVerdict::NonMember { .. })
    }
}

/// Samples of `(x, t]` with their distance to `x` and the nearest point of `X`.
struct Segment<'a> {
    space: &'a MetricSpace,
    samples: Vec<(SegmentPoint, f64)>,
}

impl<'a> Segment<'a> {
    fn new(space: &'a MetricSpace, set: &PointSet, x: usize, t: usize) -> Self {
        let tol = space.tolerance();
        let mut samples = Vec::new();
        match (space.coords(x), space.coords(t)) {
            (Some(px), Some(pt)) => {
                let dxt = space.d(x, t);
                // Points of X on the segment first: they give ratio zero.
                for z in set.iter().filter(|&z| z != x) {
                    let (dxz, dzt) = (space.d(x, z), space.d(z, t));
                    if dxz + dzt <= dxt + tol && dxz > tol {
                        samples.push((SegmentPoint::Point(z), dxz));
                    }
                }
                for j in 0..=SEGMENT_DEPTH {
                    let f = 0.5f64.powi(j);
                    let s: Vec<f64> = px.iter().zip(pt).map(|(a, b)| a + f * (b - a)).collect();
                    samples.push((SegmentPoint::Coords(s), f * dxt));
                }
            }
            _ => {
                for s in space.metric_segment(x, t).iter().filter(|&s| s != x) {
                    samples.push((SegmentPoint::Point(s), space.d(x, s)));
                }
            }
        }
        Segment { space, samples }
    }

    fn dist(&self, z: usize, s: &SegmentPoint) -> f64 {
        match s {
            SegmentPoint::Point(p) => self.space.d(z, *p),
            SegmentPoint::Coords(c) => self.space.d_to_coords(z, c).expect("embedded"),
        }
    }

    /// First sample admitting `z ∈ X` with `d(z,s) ≤ β d(x,s)`; samples so
    /// close to `x` that the tolerance would dominate are skipped.
    fn witness(&self, set: &PointSet, beta: f64) -> Option<BetaWitness> {
        let tol = self.space.tolerance();
        self.samples
            .iter()
            .filter(|(_, dxs)| beta * dxs > tol)
            .find_map(|(s, dxs)| {
                let (z, dzs) = set
                    .iter()
                    .map(|z| (z, self.dist(z, s)))
                    .fold((usize::MAX, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
                (dzs <= beta * dxs + tol).then(|| BetaWitness {
                    beta,
                    s: s.clone(),
                    z,
                    ratio: dzs / dxs,
                })
            })
    }
}

/// Membership of `t` in the generalized inward set of `X` at `x`, certified
/// level by level along a strictly decreasing `β` schedule.
pub fn generalized_inward_membership(
    space: &MetricSpace,
    set: &PointSet,
    x: usize,
    t: usize,
    schedule: Option<&[f64]>,
) -> Result<InwardCertificate> {
    require_in(set, x)?;
    space.check_index(t)?;
    let betas = schedule.map(<[f64]>::to_vec).unwrap_or_else(default_schedule);
    if betas.is_empty() || betas.iter().any(|&b| !(b > 0.0)) || betas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParams(
            "the beta schedule must be positive and strictly decreasing".into(),
        ));
    }
    let mut cert = InwardCertificate {
        x,
        t,
        betas: betas.clone(),
        per_beta: Vec::new(),
        verdict: InwardVerdict::Member,
    };
    if x == t {
        return Ok(cert);
    }
    let seg = Segment::new(space, set, x, t);
    let mut exact = true;
    for &beta in &betas {
        match seg.witness(set, beta) {
            Some(w) => {
                exact &= w.ratio <= space.tolerance();
                cert.per_beta.push(w);
            }
            None => {
                cert.verdict = InwardVerdict::NonMember { beta };
                return Ok(cert);
            }
        }
    }
    if !exact {
        cert.verdict = InwardVerdict::NumericalMember;
    }
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaWitness {
    pub beta: f64,
    pub z: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// The same inequality against the set `t` is nearest in, when given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set_rhs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub set_holds: Option<bool>,
}

/// From an inwardness certificate, the `z ∈ X` with
/// `(1−ε) d(x,z) ≤ d(x,t) − d(z,t)`, taken at the largest scheduled
/// `β ≤ ε/(2+ε)`, or at `ε/(2+ε)` itself when the witnesses are exact. With
/// `nearest_in = Some(C)` it also checks `(1−ε) d(x,z) ≤ d(x,C) − d(z,C)`.
pub fn lemma35_witness(
    space: &MetricSpace,
    cert: &InwardCertificate,
    epsilon: f64,
    nearest_in: Option<&PointSet>,
) -> Result<LemmaWitness> {
    if !cert.is_member() {
        return Err(Error::Precondition(format!("{} is not inward at {}", cert.t, cert.x)));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParams(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    let (x, t) = (cert.x, cert.t);
    let tol = space.tolerance();
    let needed = epsilon / (2.0 + epsilon);
    let exact = cert.verdict == InwardVerdict::Member && cert.per_beta.iter().all(|w| w.ratio <= tol);
    let (beta, z) = if x == t {
        (needed, x)
    } else if exact && !cert.per_beta.is_empty() {
        // a zero-ratio witness serves every β
        (needed, cert.per_beta[cert.per_beta.len() - 1].z)
    } else {
        let w = cert
            .per_beta
            .iter()
            .find(|w| w.beta <= needed)
            .ok_or(Error::ScheduleDepth {
                needed,
                smallest: cert.betas.last().copied().unwrap_or(f64::NAN),
            })?;
        (w.beta, w.z)
    };
    let lhs = (1.0 - epsilon) * space.d(x, z);
    let rhs = space.d(x, t) - space.d(z, t);
    let (set_rhs, set_holds) = match nearest_in {
        Some(c) => {
            let r = space.point_set_dist(x, c) - space.point_set_dist(z, c);
            (Some(r), Some(lhs <= r + tol))
        }
        None => (None, None),
    };
    Ok(LemmaWitness {
        beta,
        z,
        lhs,
        rhs,
        holds: lhs <= rhs + tol,
        set_rhs,
        set_holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InwardMode {
    /// Metric inwardness with the segment witness lemma.
    Generalized,
    /// Linear inwardness in an embedded space, with `ε = 0`.
    NormedInward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InwardStage {
    Contraction,
    Inwardness,
    Witness,
    Admissibility,
    Descent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InwardStep {
    pub x: usize,
    /// Nearest point of `F(x)`.
    pub t: usize,
    pub verdict: InwardVerdict,
    /// Point certified by the inwardness argument.
    pub witness: usize,
    /// Point actually moved to.
    pub to: usize,
    pub gap_before: f64,
    pub gap_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InwardSolveVerdict {
    pub fixed_point: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<InwardStage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_at: Option<usize>,
    pub contraction: ConditionReport,
    pub steps: Vec<InwardStep>,
    pub confirmed: bool,
}

/// Contraction with inward nearest values: each step certifies that the
/// nearest value point is inward, extracts a point satisfying (15) at
/// coefficient `1−α−ε`, and moves by the gap-descent rule.
pub fn inward_contraction_solve(
    map: &MultiMap,
    x0: usize,
    alpha: f64,
    epsilon: f64,
    mode: InwardMode,
) -> Result<InwardSolveVerdict> {
    let epsilon = match mode {
        InwardMode::NormedInward => {
            if !map.space().is_embedded() {
                return Err(Error::Unsupported("normed inwardness needs an embedded space".into()));
            }
            0.0
        }
        InwardMode::Generalized => epsilon,
    };
    if !(0.0..1.0).contains(&alpha) || alpha + epsilon >= 1.0 {
        return Err(Error::InvalidParams(format!(
            "need 0 <= alpha < 1 and alpha + epsilon < 1, got {alpha} and {epsilon}"
        )));
    }
    if mode == InwardMode::Generalized && !(epsilon > 0.0) {
        return Err(Error::InvalidParams("the generalized mode needs epsilon > 0".into()));
    }
    map.values(x0)?;
    let contraction = check_condition(map, ConditionId::Co2, &ConditionParams::alpha(alpha))?;
    let mut v = InwardSolveVerdict {
        fixed_point: None,
        failed_stage: None,
        failed_at: None,
        contraction,
        steps: Vec::new(),
        confirmed: false,
    };
    if !v.contraction.holds {
        v.failed_stage = Some(InwardStage::Contraction);
        return Ok(v);
    }
    let sp = map.space();
    let tol = sp.tolerance();
    let c = 1.0 - alpha - epsilon;
    let gap = |z: usize| map.gap_of(z).expect("domain");
    let fail = |mut v: InwardSolveVerdict, stage, x| {
        v.failed_stage = Some(stage);
        v.failed_at = Some(x);
        Ok(v)
    };
    let mut x = x0;
    for _ in 0..=map.domain().len() {
        if map.is_fixed(x) {
            v.fixed_point = Some(x);
            v.confirmed = map.fixed_points().contains(&x);
            return Ok(v);
        }
        let fx = map.values(x)?;
        let t = sp.nearest_point(x, fx);
        let (verdict, witness) = match mode {
            InwardMode::Generalized => {
                let cert = generalized_inward_membership(sp, map.domain(), x, t, None)?;
                if !cert.is_member() {
                    return fail(v, InwardStage::Inwardness, x);
                }
                match lemma35_witness(sp, &cert, epsilon, Some(fx)) {
                    Ok(w) if w.holds && w.set_holds == Some(true) => (cert.verdict, w.z),
                    _ => return fail(v, InwardStage::Witness, x),
                }
            }
            InwardMode::NormedInward => {
                let pt = sp.coords(t).expect("embedded").to_vec();
                let n = inward_membership_normed(sp, map.domain(), x, &pt)?;
                let Some(z) = n.z.filter(|_| n.member) else {
                    return fail(v, InwardStage::Inwardness, x);
                };
                // z lies on [x, t], so d(x,t) = d(x,z) + d(z,t).
                let (dxz, dzt, dxt) = (sp.d(x, z), sp.d(z, t), sp.d(x, t));
                if (dxz + dzt - dxt).abs() > tol {
                    return fail(v, InwardStage::Witness, x);
                }
                (InwardVerdict::Member, z)
            }
        };
        if witness == x || c * sp.d(x, witness) > gap(x) - gap(witness) + tol {
            return fail(v, InwardStage::Admissibility, x);
        }
        let to = map
            .domain()
            .iter()
            .filter(|&z| z != x && gap(x) - gap(z) > tol && c * sp.d(x, z) <= gap(x) - gap(z) + tol)
            .min_by(|&a, &b| gap(a).total_cmp(&gap(b)).then(a.cmp(&b)));
        let Some(to) = to else {
            return fail(v, InwardStage::Descent, x);
        };
        v.steps.push(InwardStep {
            x,
            t,
            verdict,
            witness,
            to,
            gap_before: gap(x),
            gap_after: gap(to),
        });
        x = to;
    }
    fail(v, InwardStage::Descent, x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinGapVerdict {
    pub minimizer: usize,
    pub min_gap: f64,
    pub fixed_point: Option<usize>,
    pub co21: ConditionReport,
    /// A `(21)` witness below the minimum, which cannot exist.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contradiction: Option<usize>,
}

/// Full scan for the smallest gap, checked against condition (21).
pub fn compact_min_gap(map: &MultiMap) -> Result<MinGapVerdict> {
    let (minimizer, min_gap) = map
        .domain()
        .iter()
        .map(|x| (x, map.gap_of(x).expect("domain")))
        .fold((usize::MAX, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
    let co21 = check_condition(map, ConditionId::Co21, &ConditionParams::default())?;
    let tol = map.tolerance();
    let contradiction = (co21.holds && min_gap > tol)
        .then(|| co21.witness_at(&[minimizer]).map(|w| w[0]))
        .flatten();
    Ok(MinGapVerdict {
        minimizer,
        min_gap,
        fixed_point: (min_gap <= tol).then_some(minimizer),
        co21,
        contradiction,
    })
}
