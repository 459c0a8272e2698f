//! Numerical laboratory for set-valued fixed-point theory on finite metric spaces.

// Distance matrices read best with explicit indices, and `!(a < b)` is how
// NaN parameters are rejected.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bead;
pub mod center;
pub mod conditions;
pub mod descent;
pub mod error;
pub mod harness;
pub mod instances;
pub mod inward;
pub mod metric;
pub mod multimap;
pub mod potential;
pub mod report;
pub mod scan;
pub mod solver;

pub use bead::{bead_modulus, BeadCertificate, BeadSampler};
pub use center::{asymptotic_center, nonexpansive_solve, regular_subsequence, regularity_check, CenterResult};
pub use conditions::{check_condition, ConditionId, ConditionParams, ConditionReport, ConditionSpec};
pub use descent::{caristi_descent, gap_descent, DescentOutcome, DescentVerdict};
pub use error::{Error, Result};
pub use harness::{execute, run, Diagnostic, ExitStatus, Problem, ProblemFile, Task};
pub use instances::{InstanceSampler, SamplerConfig};
pub use inward::{compact_min_gap, generalized_inward_membership, inward_contraction_solve, InwardCertificate};
pub use metric::{MetricSpace, Norm, PointSet, DEFAULT_TOLERANCE};
pub use multimap::{GraphPair, MultiMap};
pub use potential::{GraphMetric, Potential, ScaledMetric};
pub use report::{report_schema_version, Report, REPORT_SCHEMA_VERSION};
pub use scan::{counterexample_search, implication_scan, Implication, ScanReport};
pub use solver::{iterate_co3, iterate_co7, iterate_nearest, resolve_limit, IterationTrace, LimitVerdict, TraceStatus};
