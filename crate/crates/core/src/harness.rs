//! Problem files: loading, validation, dispatch, and artifact emission.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bead::{bead_modulus, BeadCertificate, BeadSampler};
use crate::center::{
    asymptotic_center, nonexpansive_solve, regular_subsequence, regularity_check, CenterResult, NonexpansiveVerdict,
    RegularityReport,
};
use crate::conditions::{check_condition, check_spec, ConditionId, ConditionParams, ConditionReport, ConditionSpec};
use crate::descent::{
    build_co15_step, build_co18_step, caristi_descent, gap_descent, graph_descent_co16, pair_descent_co20,
    DescentOutcome, DescentVerdict, StepCertificate,
};
use crate::error::{Error, Result};
use crate::instances::SamplerConfig;
use crate::inward::{
    compact_min_gap, generalized_inward_membership, inward_contraction_solve, lemma35_witness, InwardCertificate,
    InwardMode, InwardSolveVerdict, LemmaWitness, MinGapVerdict,
};
use crate::metric::{MetricSpace, PointSet, SpaceSpec};
use crate::multimap::{GraphPair, MapSpec, MultiMap};
use crate::potential::{GraphMetric, Potential, ScaledMetric};
use crate::report::{version_warning, Report};
use crate::scan::{counterexample_search, implication_scan, Counterexample, Implication, ScanReport};
use crate::solver::{
    check_co6_trace, iterate_co3, iterate_co7, iterate_nearest, resolve_limit, IterationTrace, LimitVerdict,
    SelectionRule, TraceStatus,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Solve,
    Check,
    Scan,
    Bead,
    Center,
    Inward,
    Descent,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Solve => "solve",
            Task::Check => "check",
            Task::Scan => "scan",
            Task::Bead => "bead",
            Task::Center => "center",
            Task::Inward => "inward",
            Task::Descent => "descent",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSpec>,
    pub task: Task,
    #[serde(default)]
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Co3,
    Nearest,
    Co7,
}

fn default_solve_method() -> SolveMethod {
    SolveMethod::Co3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveParams {
    #[serde(default = "default_solve_method")]
    pub method: SolveMethod,
    pub x0: usize,
    pub alpha: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckParams {
    pub conditions: Vec<ConditionSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchParams {
    pub holds: ConditionSpec,
    pub fails: ConditionSpec,
    pub budget: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanParams {
    pub trials: u64,
    #[serde(default)]
    pub pairs: Vec<Implication>,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub search: Option<SearchParams>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeadParams {
    pub r: f64,
    pub beta: f64,
    #[serde(default)]
    pub sampler: BeadSampler,
}

fn default_budget() -> usize {
    2000
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterParams {
    /// Explicit sequence; otherwise the map's pipeline runs from `x0`.
    #[serde(default)]
    pub sequence: Option<Vec<usize>>,
    #[serde(default)]
    pub pool: Option<Vec<usize>>,
    #[serde(default)]
    pub x0: Option<usize>,
    /// Gap decay rate for the pipeline run from `x0`.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_budget")]
    pub budget: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InwardTask {
    Generalized,
    NormedInward,
    MinGap,
    Membership,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InwardParams {
    pub mode: InwardTask,
    #[serde(default)]
    pub x0: Option<usize>,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub epsilon: f64,
    /// Membership queries: `t` tested against the domain at `x`.
    #[serde(default)]
    pub x: Option<usize>,
    #[serde(default)]
    pub t: Option<usize>,
    #[serde(default)]
    pub schedule: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescentMethod {
    Caristi,
    Gap,
    Co15,
    Co18,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescentParams {
    pub method: DescentMethod,
    pub x0: usize,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub epsilon1: f64,
    /// Potential for the Caristi method; the gap function by default.
    #[serde(default)]
    pub potential: Option<Potential>,
    /// Scale of the step metric for the Caristi and gap methods.
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum TaskParams {
    Solve(SolveParams),
    Check(CheckParams),
    Scan(ScanParams),
    Bead(BeadParams),
    Center(CenterParams),
    Inward(InwardParams),
    Descent(DescentParams),
}

/// A field path and what is wrong there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl Diagnostic {
    fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Diagnostic {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for Diagnostic {}

/// A validated problem file.
#[derive(Debug, Clone)]
pub struct Problem {
    pub file: ProblemFile,
    pub space: Option<Arc<MetricSpace>>,
    pub map: Option<MultiMap>,
    pub params: TaskParams,
    pub warnings: Vec<String>,
}

fn parse<T: DeserializeOwned>(prefix: &str, value: serde_json::Value) -> Result<T, Diagnostic> {
    let value = if value.is_null() {
        serde_json::Value::Object(Default::default())
    } else {
        value
    };
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = match (prefix, inner.as_str()) {
            (p, ".") => p.to_string(),
            ("", i) => i.to_string(),
            (p, i) => format!("{p}.{i}"),
        };
        Diagnostic::new(path, e.into_inner())
    })
}

fn space_error(e: Error) -> Diagnostic {
    Diagnostic::new("space", e)
}

fn map_error(e: Error) -> Diagnostic {
    match e {
        Error::EmptyValue(x) => Diagnostic::new(format!("map.values.{x}"), "empty"),
        Error::InvalidMap(m) => match m.split_once(": ") {
            Some((path, msg))
                if path.starts_with("values") || path.starts_with("domain") || path.starts_with("params") =>
            {
                Diagnostic::new(format!("map.{path}"), msg)
            }
            _ => Diagnostic::new("map", m),
        },
        other => Diagnostic::new("map", other),
    }
}

impl Problem {
    pub fn from_json(text: &str) -> Result<Self, Diagnostic> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ProblemFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Diagnostic::new(if path == "." { String::new() } else { path }, e.into_inner())
        })?;
        Self::from_file(file)
    }

    pub fn from_path(path: &Path) -> Result<Self, Diagnostic> {
        let text = fs::read_to_string(path).map_err(|e| Diagnostic::new("", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_file(file: ProblemFile) -> Result<Self, Diagnostic> {
        let warnings: Vec<String> = version_warning(file.schema_version.as_deref()).into_iter().collect();
        let space = match &file.space {
            Some(s) => Some(Arc::new(MetricSpace::from_spec(s).map_err(space_error)?)),
            None => None,
        };
        let map = match (&file.map, &space) {
            (Some(m), Some(sp)) => Some(MultiMap::from_spec(sp.clone(), m).map_err(map_error)?),
            (Some(_), None) => return Err(Diagnostic::new("space", "required when a map is given")),
            (None, _) => None,
        };
        let p = file.params.clone();
        let params = match file.task {
            Task::Solve => TaskParams::Solve(parse("params", p)?),
            Task::Check => TaskParams::Check(parse("params", p)?),
            Task::Scan => TaskParams::Scan(parse("params", p)?),
            Task::Bead => TaskParams::Bead(parse("params", p)?),
            Task::Center => TaskParams::Center(parse("params", p)?),
            Task::Inward => TaskParams::Inward(parse("params", p)?),
            Task::Descent => TaskParams::Descent(parse("params", p)?),
        };
        let problem = Problem {
            file,
            space,
            map,
            params,
            warnings,
        };
        problem.check_references()?;
        Ok(problem)
    }

    pub fn task(&self) -> Task {
        self.file.task
    }

    fn need_map(&self) -> Result<&MultiMap, Diagnostic> {
        self.map
            .as_ref()
            .ok_or_else(|| Diagnostic::new("map", "required for this task"))
    }

    fn need_space(&self) -> Result<&Arc<MetricSpace>, Diagnostic> {
        self.space
            .as_ref()
            .ok_or_else(|| Diagnostic::new("space", "required for this task"))
    }

    /// Indices named in the parameters must exist where they are used.
    fn check_references(&self) -> Result<(), Diagnostic> {
        let in_domain = |map: &MultiMap, field: &str, x: usize| {
            if map.in_domain(x) {
                Ok(())
            } else {
                Err(Diagnostic::new(
                    format!("params.{field}"),
                    format!("point {x} is not in the domain"),
                ))
            }
        };
        let in_space = |sp: &MetricSpace, field: String, x: usize| {
            sp.check_index(x)
                .map_err(|e| Diagnostic::new(format!("params.{field}"), e))
        };
        match &self.params {
            TaskParams::Solve(p) => in_domain(self.need_map()?, "x0", p.x0),
            TaskParams::Check(_) => self.need_map().map(|_| ()),
            TaskParams::Scan(p) => {
                if p.trials == 0 {
                    return Err(Diagnostic::new("params.trials", "must be at least 1"));
                }
                if p.search.as_ref().is_some_and(|s| s.budget == 0) {
                    return Err(Diagnostic::new("params.search.budget", "must be at least 1"));
                }
                Ok(())
            }
            TaskParams::Bead(_) => self.need_space().map(|_| ()),
            TaskParams::Center(p) => {
                let sp = self.need_space()?;
                for (i, &x) in p.pool.iter().flatten().enumerate() {
                    in_space(sp, format!("pool.{i}"), x)?;
                }
                match (&p.sequence, p.x0) {
                    (Some(seq), _) => {
                        if seq.is_empty() {
                            return Err(Diagnostic::new("params.sequence", "empty"));
                        }
                        for (i, &x) in seq.iter().enumerate() {
                            in_space(sp, format!("sequence.{i}"), x)?;
                        }
                        Ok(())
                    }
                    (None, Some(x0)) => {
                        if p.alpha.is_none() {
                            return Err(Diagnostic::new("params.alpha", "required with x0"));
                        }
                        in_domain(self.need_map()?, "x0", x0)
                    }
                    (None, None) => Err(Diagnostic::new("params", "either sequence or x0 is required")),
                }
            }
            TaskParams::Inward(p) => {
                let map = self.need_map()?;
                match p.mode {
                    InwardTask::MinGap => Ok(()),
                    InwardTask::Membership => {
                        let x = p.x.ok_or_else(|| Diagnostic::new("params.x", "required"))?;
                        let t = p.t.ok_or_else(|| Diagnostic::new("params.t", "required"))?;
                        in_domain(map, "x", x)?;
                        in_space(map.space(), "t".into(), t)
                    }
                    InwardTask::Generalized | InwardTask::NormedInward => {
                        let x0 = p.x0.ok_or_else(|| Diagnostic::new("params.x0", "required"))?;
                        in_domain(map, "x0", x0)
                    }
                }
            }
            TaskParams::Descent(p) => in_domain(self.need_map()?, "x0", p.x0),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub method: SolveMethod,
    pub x0: usize,
    /// The condition the selection rule relies on.
    pub hypothesis: ConditionReport,
    pub status: TraceStatus,
    pub iterations: usize,
    pub limit: LimitVerdict,
    pub fixed_point: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_point_coords: Option<Vec<f64>>,
    /// First index at which the step or gap bound fails.
    pub decay_violation: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub co6: Option<ConditionReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub reports: Vec<ConditionReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub holds: ConditionSpec,
    pub fails: ConditionSpec,
    pub budget: u64,
    pub found: Option<Counterexample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    #[serde(flatten)]
    pub scan: Option<ScanReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchResult>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SequenceCenterResult {
    pub sequence: Vec<usize>,
    pub center: CenterResult,
    pub regularity: RegularityReport,
    /// Positions into the sequence.
    pub regular_subsequence: Vec<usize>,
    pub subsequence_center: CenterResult,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
#[allow(clippy::large_enum_variant)]
pub enum CenterTaskResult {
    Sequence(SequenceCenterResult),
    Pipeline(NonexpansiveVerdict),
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipResult {
    pub certificate: InwardCertificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma: Option<LemmaWitness>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum InwardTaskResult {
    Solve(InwardSolveVerdict),
    MinGap(MinGapVerdict),
    Membership(MembershipResult),
}

#[derive(Debug, Clone, Serialize)]
pub struct DescentResult {
    pub method: DescentMethod,
    pub hypotheses: Vec<ConditionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<StepCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descent: Option<DescentVerdict<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph_descent: Option<DescentVerdict<GraphPair>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_descent: Option<DescentVerdict<GraphPair>>,
    pub fixed_point: Option<usize>,
    /// The end point passes the membership oracle.
    pub confirmed: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum TaskResult {
    Solve(Box<SolveResult>),
    Check(CheckResult),
    Scan(Box<ScanResult>),
    Bead(Box<BeadCertificate>),
    Center(Box<CenterTaskResult>),
    Inward(Box<InwardTaskResult>),
    Descent(Box<DescentResult>),
}

/// Everything a run writes, as bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub report: Vec<u8>,
    pub trace_jsonl: Option<Vec<u8>>,
    pub trace_csv: Option<Vec<u8>>,
}

impl Artifacts {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let mut put = |name: &str, bytes: &[u8]| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, bytes)?;
            written.push(path);
            Ok(())
        };
        put("report.json", &self.report)?;
        if let Some(t) = &self.trace_jsonl {
            put("trace.jsonl", t)?;
        }
        if let Some(t) = &self.trace_csv {
            put("trace.csv", t)?;
        }
        Ok(written)
    }
}

fn trace_bytes(trace: &IterationTrace) -> Result<(Vec<u8>, Vec<u8>)> {
    let (mut jsonl, mut csv) = (Vec::new(), Vec::new());
    trace.write_jsonl(&mut jsonl)?;
    trace.write_csv(&mut csv)?;
    Ok((jsonl, csv))
}

fn jsonl_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    Ok(out)
}

fn expect<T>(v: Result<T, Diagnostic>) -> Result<T> {
    v.map_err(|d| Error::InvalidParams(d.to_string()))
}

/// Runs the task and renders its artifacts without touching the filesystem.
pub fn execute(problem: &Problem) -> Result<Artifacts> {
    let mut trace_jsonl = None;
    let mut trace_csv = None;
    let result = match &problem.params {
        TaskParams::Solve(p) => {
            let map = expect(problem.need_map())?;
            let (trace, hypothesis) = match p.method {
                SolveMethod::Co3 => (
                    iterate_co3(map, p.x0, p.alpha, p.epsilon, p.max_iter)?,
                    check_condition(map, ConditionId::Co3, &ConditionParams::alpha_eps(p.alpha, p.epsilon))?,
                ),
                SolveMethod::Nearest => (
                    iterate_nearest(map, p.x0, p.alpha, p.max_iter)?,
                    check_condition(map, ConditionId::Co5, &ConditionParams::alpha(p.alpha))?,
                ),
                SolveMethod::Co7 => (
                    iterate_co7(map, p.x0, p.alpha, p.max_iter)?,
                    check_condition(map, ConditionId::Co7, &ConditionParams::alpha(p.alpha))?,
                ),
            };
            let limit = resolve_limit(map, &trace)?;
            let decay_violation = match trace.rule {
                SelectionRule::Co3 => trace.co3_decay_violation(1e-7),
                _ => trace.gap_decay_violation(1e-7),
            };
            let (j, c) = trace_bytes(&trace)?;
            trace_jsonl = Some(j);
            trace_csv = Some(c);
            TaskResult::Solve(Box::new(SolveResult {
                method: p.method,
                x0: p.x0,
                hypothesis,
                status: trace.status,
                iterations: trace.steps.len(),
                fixed_point: limit.fixed_point,
                fixed_point_coords: limit
                    .fixed_point
                    .and_then(|x| map.space().coords(x))
                    .map(<[f64]>::to_vec),
                limit,
                decay_violation,
                co6: check_co6_trace(map, &trace).ok(),
            }))
        }
        TaskParams::Check(p) => {
            let map = expect(problem.need_map())?;
            let reports = p.conditions.iter().map(|c| check_spec(map, c)).collect::<Result<_>>()?;
            TaskResult::Check(CheckResult { reports })
        }
        TaskParams::Scan(p) => {
            let seed = problem.file.seed.unwrap_or(0);
            let sampler = crate::instances::InstanceSampler::new(p.sampler.clone());
            let scan = if p.pairs.is_empty() {
                None
            } else {
                Some(implication_scan(&sampler, seed, p.trials, &p.pairs)?)
            };
            let search = match &p.search {
                Some(s) => Some(SearchResult {
                    holds: s.holds.clone(),
                    fails: s.fails.clone(),
                    budget: s.budget,
                    found: counterexample_search(&sampler, seed, &s.holds, &s.fails, s.budget)?,
                }),
                None => None,
            };
            TaskResult::Scan(Box::new(ScanResult { scan, search }))
        }
        TaskParams::Bead(p) => {
            let space = expect(problem.need_space())?;
            let mut sampler = p.sampler.clone();
            if let Some(seed) = problem.file.seed {
                sampler.seed = seed;
            }
            TaskResult::Bead(Box::new(bead_modulus(space, p.r, p.beta, &sampler)?))
        }
        TaskParams::Center(p) => {
            let space = expect(problem.need_space())?;
            let pool = match &p.pool {
                Some(v) => PointSet::new(v.iter().copied())?,
                None => space.all_points(),
            };
            match (&p.sequence, p.x0) {
                (Some(seq), _) => {
                    let center = asymptotic_center(space, seq, &pool)?;
                    let regularity = regularity_check(space, seq, &pool, p.budget)?;
                    let positions = regular_subsequence(space, seq, &pool, p.budget)?;
                    let sub: Vec<usize> = positions.iter().map(|&i| seq[i]).collect();
                    let subsequence_center = asymptotic_center(space, &sub, &pool)?;
                    TaskResult::Center(Box::new(CenterTaskResult::Sequence(SequenceCenterResult {
                        sequence: seq.clone(),
                        center,
                        regularity,
                        regular_subsequence: positions,
                        subsequence_center,
                    })))
                }
                (None, Some(x0)) => {
                    let map = expect(problem.need_map())?;
                    let v = nonexpansive_solve(map, x0, p.alpha.unwrap_or_default(), p.budget)?;
                    let (j, c) = trace_bytes(&v.trace)?;
                    trace_jsonl = Some(j);
                    trace_csv = Some(c);
                    TaskResult::Center(Box::new(CenterTaskResult::Pipeline(v)))
                }
                (None, None) => return Err(Error::InvalidParams("either sequence or x0 is required".into())),
            }
        }
        TaskParams::Inward(p) => {
            let map = expect(problem.need_map())?;
            let r = match p.mode {
                InwardTask::MinGap => InwardTaskResult::MinGap(compact_min_gap(map)?),
                InwardTask::Membership => {
                    let (x, t) = (p.x.unwrap_or_default(), p.t.unwrap_or_default());
                    let certificate =
                        generalized_inward_membership(map.space(), map.domain(), x, t, p.schedule.as_deref())?;
                    let lemma = if p.epsilon > 0.0 && certificate.is_member() {
                        Some(lemma35_witness(map.space(), &certificate, p.epsilon, None)?)
                    } else {
                        None
                    };
                    InwardTaskResult::Membership(MembershipResult { certificate, lemma })
                }
                InwardTask::Generalized | InwardTask::NormedInward => {
                    let mode = if p.mode == InwardTask::Generalized {
                        InwardMode::Generalized
                    } else {
                        InwardMode::NormedInward
                    };
                    let x0 = p.x0.unwrap_or_default();
                    InwardTaskResult::Solve(inward_contraction_solve(map, x0, p.alpha, p.epsilon, mode)?)
                }
            };
            TaskResult::Inward(Box::new(r))
        }
        TaskParams::Descent(p) => {
            let map = expect(problem.need_map())?;
            let r = run_descent(map, p)?;
            let moves = match (&r.descent, &r.graph_descent) {
                (Some(d), _) => jsonl_bytes(&d.moves)?,
                (None, Some(g)) => jsonl_bytes(&g.moves)?,
                _ => Vec::new(),
            };
            trace_jsonl = Some(moves);
            TaskResult::Descent(Box::new(r))
        }
    };
    let report = Report::new(
        problem.task().name(),
        problem.file.seed,
        problem.warnings.clone(),
        result,
    );
    Ok(Artifacts {
        report: report.to_bytes()?,
        trace_jsonl,
        trace_csv,
    })
}

fn run_descent(map: &MultiMap, p: &DescentParams) -> Result<DescentResult> {
    let mut r = DescentResult {
        method: p.method,
        hypotheses: Vec::new(),
        step: None,
        descent: None,
        graph_descent: None,
        pair_descent: None,
        fixed_point: None,
        confirmed: false,
    };
    match p.method {
        DescentMethod::Caristi | DescentMethod::Gap => {
            let phi = match (&p.potential, p.method) {
                (Some(phi), DescentMethod::Caristi) => phi.clone(),
                _ => Potential::gap(map),
            };
            let delta = ScaledMetric::scaled(p.scale)?;
            let params = ConditionParams::default()
                .with_potential(phi.clone())
                .with_metric(delta.clone());
            r.hypotheses.push(check_condition(map, ConditionId::Co13, &params)?);
            r.descent = Some(if p.method == DescentMethod::Gap {
                gap_descent(map, &delta, p.x0, p.max_iter)?
            } else {
                caristi_descent(map, &phi, &delta, p.x0, p.max_iter)?
            });
        }
        DescentMethod::Co15 => {
            let co14 = check_condition(map, ConditionId::Co14, &ConditionParams::alpha_eps(p.alpha, p.epsilon))?;
            let step = build_co15_step(map, p.alpha, p.epsilon, &co14)?;
            r.hypotheses.push(step.contraction.clone());
            r.hypotheses.push(co14);
            r.descent = Some(gap_descent(map, &step.delta, p.x0, p.max_iter)?);
            r.step = Some(step);
        }
        DescentMethod::Co18 => {
            let params = ConditionParams::alpha_eps(p.alpha, p.epsilon).with_epsilon1(p.epsilon1);
            let co17 = check_condition(map, ConditionId::Co17, &params)?;
            let step = build_co18_step(map, p.alpha, p.epsilon, p.epsilon1, &co17)?;
            r.hypotheses.push(step.contraction.clone());
            r.hypotheses.push(co17);
            let k = step.k.unwrap_or(p.alpha + p.epsilon);
            let start = GraphPair::new(p.x0, map.space().nearest_point(p.x0, map.values(p.x0)?));
            r.graph_descent = Some(graph_descent_co16(map, &step.delta, k, start, p.max_iter)?);
            let metric = GraphMetric::product_max(map, 1.0 - p.alpha - p.epsilon, k)?;
            r.hypotheses.push(check_condition(
                map,
                ConditionId::Co20,
                &ConditionParams::default().with_graph_metric(metric.clone()),
            )?);
            r.pair_descent = Some(pair_descent_co20(map, &metric, start, p.max_iter)?);
            r.step = Some(step);
        }
    }
    let end = match (&r.descent, &r.graph_descent) {
        (Some(d), _) => (d.outcome == DescentOutcome::FixedPoint).then_some(d.end),
        (None, Some(g)) => (g.outcome == DescentOutcome::FixedPoint).then_some(g.end.x),
        _ => None,
    };
    r.fixed_point = end;
    r.confirmed = end.is_some_and(|x| map.fixed_points().contains(&x));
    Ok(r)
}

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    /// The task ran; this includes "no fixed point found" verdicts.
    Completed = 0,
    Invalid = 1,
    Internal = 2,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub status: ExitStatus,
    pub written: Vec<PathBuf>,
    pub message: Option<String>,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    fn failed(status: ExitStatus, message: impl fmt::Display) -> Self {
        RunOutcome {
            status,
            written: Vec::new(),
            message: Some(message.to_string()),
            warnings: Vec::new(),
        }
    }
}

/// Loads, runs, and writes artifacts into `out`.
pub fn run(text: &str, out: &Path) -> RunOutcome {
    let problem = match Problem::from_json(text) {
        Ok(p) => p,
        Err(d) => return RunOutcome::failed(ExitStatus::Invalid, d),
    };
    run_problem(&problem, out)
}

pub fn run_problem(problem: &Problem, out: &Path) -> RunOutcome {
    let artifacts = match execute(problem) {
        Ok(a) => a,
        Err(e) if e.is_validation() => return RunOutcome::failed(ExitStatus::Invalid, e),
        Err(e) => return RunOutcome::failed(ExitStatus::Internal, e),
    };
    match artifacts.write(out) {
        Ok(written) => RunOutcome {
            status: ExitStatus::Completed,
            written,
            message: None,
            warnings: problem.warnings.clone(),
        },
        Err(e) => RunOutcome::failed(ExitStatus::Internal, e),
    }
}
