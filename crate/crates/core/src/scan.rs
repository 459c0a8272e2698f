//! Randomized checks of implications between conditions, and searches for
//! instances separating them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{check_spec, ConditionReport, ConditionSpec};
use crate::error::{Error, Result};
use crate::instances::{InstanceSampler, SampledInstance, ValueMode};
use crate::metric::SpaceSpec;
use crate::multimap::{MapSpec, MultiMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Implication {
    pub hypothesis: ConditionSpec,
    pub conclusion: ConditionSpec,
}

impl Implication {
    pub fn new(hypothesis: ConditionSpec, conclusion: ConditionSpec) -> Self {
        Implication { hypothesis, conclusion }
    }
}

/// A sampled instance in problem-file form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub mode: ValueMode,
    pub space: SpaceSpec,
    pub map: MapSpec,
}

impl InstanceRecord {
    pub fn of(inst: &SampledInstance) -> Self {
        InstanceRecord {
            mode: inst.mode,
            space: inst.map.space().to_spec(),
            map: inst.map.to_spec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub seed: u64,
    pub trial: u64,
    /// Index into the scanned implications.
    pub pair: usize,
    pub instance: InstanceRecord,
    pub hypothesis_report: ConditionReport,
    pub conclusion_report: ConditionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub implication: Implication,
    pub checked: u64,
    pub violations: u64,
    /// Trials where a check did not apply, such as (1) on a multivalued map.
    pub skipped: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub seed: u64,
    pub trials: u64,
    /// Instance-implication pairs whose hypothesis held.
    pub checked: u64,
    pub pairs: Vec<PairSummary>,
    pub violations: Vec<Violation>,
}

enum Outcome {
    Skipped,
    Vacuous,
    Held,
    Violated(Box<(ConditionReport, ConditionReport)>),
}

fn check_or_skip(map: &MultiMap, spec: &ConditionSpec) -> Result<Option<ConditionReport>> {
    match check_spec(map, spec) {
        Ok(r) => Ok(Some(r)),
        Err(Error::Precondition(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn evaluate(map: &MultiMap, imp: &Implication) -> Result<Outcome> {
    let Some(h) = check_or_skip(map, &imp.hypothesis)? else {
        return Ok(Outcome::Skipped);
    };
    if !h.holds {
        return Ok(Outcome::Vacuous);
    }
    let Some(c) = check_or_skip(map, &imp.conclusion)? else {
        return Ok(Outcome::Skipped);
    };
    Ok(if c.holds {
        Outcome::Held
    } else {
        Outcome::Violated(Box::new((h, c)))
    })
}

/// Samples `trials` instances and checks every implication on each.
/// Trials run in parallel; the report is assembled in trial order.
pub fn implication_scan(
    sampler: &InstanceSampler,
    seed: u64,
    trials: u64,
    pairs: &[Implication],
) -> Result<ScanReport> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    let per_trial: Vec<Result<(SampledInstance, Vec<Outcome>)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let inst = sampler.sample(seed, trial);
            let outcomes = pairs.iter().map(|p| evaluate(&inst.map, p)).collect::<Result<_>>()?;
            Ok((inst, outcomes))
        })
        .collect();
    let mut report = ScanReport {
        seed,
        trials,
        checked: 0,
        pairs: pairs
            .iter()
            .map(|p| PairSummary {
                implication: p.clone(),
                checked: 0,
                violations: 0,
                skipped: 0,
            })
            .collect(),
        violations: Vec::new(),
    };
    for res in per_trial {
        let (inst, outcomes) = res?;
        for (i, o) in outcomes.into_iter().enumerate() {
            let s = &mut report.pairs[i];
            match o {
                Outcome::Skipped => s.skipped += 1,
                Outcome::Vacuous => {}
                Outcome::Held => s.checked += 1,
                Outcome::Violated(rep) => {
                    s.checked += 1;
                    s.violations += 1;
                    let (hypothesis_report, conclusion_report) = *rep;
                    report.violations.push(Violation {
                        seed: inst.seed,
                        trial: inst.trial,
                        pair: i,
                        instance: InstanceRecord::of(&inst),
                        hypothesis_report,
                        conclusion_report,
                    });
                }
            }
        }
    }
    report.checked = report.pairs.iter().map(|s| s.checked).sum();
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub seed: u64,
    pub trial: u64,
    pub instance: InstanceRecord,
    pub holds_report: ConditionReport,
    pub fails_report: ConditionReport,
    #[serde(skip)]
    pub map: MultiMap,
}

/// First trial whose instance satisfies `holds` and violates `fails`,
/// re-checked from its serialized form before it is returned.
pub fn counterexample_search(
    sampler: &InstanceSampler,
    seed: u64,
    holds: &ConditionSpec,
    fails: &ConditionSpec,
    budget: u64,
) -> Result<Option<Counterexample>> {
    if budget == 0 {
        return Err(Error::InvalidParams("budget must be at least 1".into()));
    }
    let imp = Implication::new(holds.clone(), fails.clone());
    let hit = (0..budget).into_par_iter().find_first(|&trial| {
        let inst = sampler.sample(seed, trial);
        matches!(evaluate(&inst.map, &imp), Ok(Outcome::Violated(_)))
    });
    let Some(trial) = hit else {
        return Ok(None);
    };
    let inst = sampler.sample(seed, trial);
    let record = InstanceRecord::of(&inst);
    let space = std::sync::Arc::new(crate::metric::MetricSpace::from_spec(&record.space)?);
    let map = MultiMap::from_spec(space, &record.map)?;
    let holds_report = check_spec(&map, holds)?;
    let fails_report = check_spec(&map, fails)?;
    if !holds_report.holds || fails_report.holds {
        return Err(Error::Precondition(format!(
            "trial {trial} did not survive re-verification"
        )));
    }
    Ok(Some(Counterexample {
        seed,
        trial,
        instance: record,
        holds_report,
        fails_report,
        map,
    }))
}
