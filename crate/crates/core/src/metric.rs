//! Finite metric spaces and the set-level distances built on them.
//!
//! A [`MetricSpace`] is either an explicit distance matrix or a cloud of
//! points in `R^m` under a norm. Every comparison that would be an equality
//! over the reals is carried out against the space-level tolerance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Norm tag for embedded spaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Norm {
    L1,
    L2,
    Linf,
    Lp(f64),
}

impl Norm {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Norm::L1 => diffs.sum(),
            Norm::L2 => diffs.map(|t| t * t).sum::<f64>().sqrt(),
            Norm::Linf => diffs.fold(0.0, f64::max),
            Norm::Lp(p) => diffs.map(|t| t.powf(p)).sum::<f64>().powf(1.0 / p),
        }
    }

    pub fn length(self, v: &[f64]) -> f64 {
        let zero = vec![0.0; v.len()];
        self.distance(v, &zero)
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Norm::L1 => f.write_str("l1"),
            Norm::L2 => f.write_str("l2"),
            Norm::Linf => f.write_str("linf"),
            Norm::Lp(p) => write!(f, "l{p}"),
        }
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tag = s.trim().to_ascii_lowercase();
        match tag.as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" | "lmax" => Ok(Norm::Linf),
            other => {
                let p = other
                    .strip_prefix('l')
                    .and_then(|rest| rest.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidSpace(format!("unknown norm `{s}`")))?;
                if !(p >= 1.0 && p.is_finite()) {
                    return Err(Error::InvalidSpace(format!("norm exponent {p} must be >= 1")));
                }
                Ok(Norm::Lp(p))
            }
        }
    }
}

impl TryFrom<String> for Norm {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Norm> for String {
    fn from(n: Norm) -> String {
        n.to_string()
    }
}

/// Nonempty, sorted, duplicate-free set of point indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct PointSet(Vec<usize>);

impl PointSet {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = indices.into_iter().collect();
        if v.is_empty() {
            return Err(Error::EmptySet);
        }
        v.sort_unstable();
        v.dedup();
        Ok(PointSet(v))
    }

    pub fn singleton(i: usize) -> Self {
        PointSet(vec![i])
    }

    /// All indices `0..n`. Panics when `n == 0`.
    pub fn range(n: usize) -> Self {
        assert!(n > 0, "range of zero points");
        PointSet((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn first(&self) -> usize {
        self.0[0]
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        PointSet::new(self.iter().chain(other.iter())).expect("union of nonempty sets")
    }

    pub fn check_range(&self, size: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last >= size => Err(Error::IndexOutOfRange { index: last, size }),
            _ => Ok(()),
        }
    }
}

impl TryFrom<Vec<usize>> for PointSet {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        PointSet::new(v)
    }
}

impl From<PointSet> for Vec<usize> {
    fn from(s: PointSet) -> Vec<usize> {
        s.0
    }
}

/// One failed metric axiom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "axiom", rename_all = "snake_case")]
pub enum MetricViolation {
    NonFinite {
        i: usize,
        j: usize,
    },
    Negative {
        i: usize,
        j: usize,
        value: f64,
    },
    ZeroDiagonal {
        i: usize,
        value: f64,
    },
    Symmetry {
        i: usize,
        j: usize,
        dij: f64,
        dji: f64,
    },
    Distinctness {
        i: usize,
        j: usize,
    },
    /// `d(i,j) > d(i,k) + d(k,j) + tolerance`.
    Triangle {
        i: usize,
        j: usize,
        k: usize,
        dij: f64,
        via: f64,
    },
}

impl fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonFinite { i, j } => write!(f, "d({i},{j}) is not finite"),
            Self::Negative { i, j, value } => write!(f, "d({i},{j}) = {value} < 0"),
            Self::ZeroDiagonal { i, value } => write!(f, "d({i},{i}) = {value} != 0"),
            Self::Symmetry { i, j, dij, dji } => {
                write!(f, "symmetry at ({i},{j}): {dij} != {dji}")
            }
            Self::Distinctness { i, j } => write!(f, "points {i} and {j} coincide"),
            Self::Triangle { i, j, k, dij, via } => {
                write!(f, "triangle at ({i},{j},{k}): {dij} > {via}")
            }
        }
    }
}

/// Lists every violated metric axiom of `matrix`. An empty list means the
/// matrix is a metric within `tolerance`.
pub fn validate_metric(matrix: &[Vec<f64>], tolerance: f64) -> Result<Vec<MetricViolation>> {
    let n = matrix.len();
    for (row, r) in matrix.iter().enumerate() {
        if r.len() != n {
            return Err(Error::NotSquare {
                row,
                len: r.len(),
                expected: n,
            });
        }
    }
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = matrix[i][j];
            if !v.is_finite() {
                out.push(MetricViolation::NonFinite { i, j });
            } else if v < 0.0 {
                out.push(MetricViolation::Negative { i, j, value: v });
            }
        }
    }
    if !out.is_empty() {
        return Ok(out);
    }
    for i in 0..n {
        if matrix[i][i].abs() > tolerance {
            out.push(MetricViolation::ZeroDiagonal { i, value: matrix[i][i] });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let (dij, dji) = (matrix[i][j], matrix[j][i]);
            if (dij - dji).abs() > tolerance {
                out.push(MetricViolation::Symmetry { i, j, dij, dji });
            }
            if dij <= tolerance {
                out.push(MetricViolation::Distinctness { i, j });
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let via = matrix[i][k] + matrix[k][j];
                if matrix[i][j] > via + tolerance {
                    out.push(MetricViolation::Triangle {
                        i,
                        j,
                        k,
                        dij: matrix[i][j],
                        via,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Serializable description of a space, as it appears in problem files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Matrix {
        d: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    Embedded {
        norm: Norm,
        points: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
    },
    /// `{0} ∪ {2^-k : k = 0..=levels+1}` on the real line, ascending.
    Dyad { levels: u32 },
}

#[derive(Debug, Clone, PartialEq)]
enum Geometry {
    Matrix,
    Embedded { norm: Norm, points: Vec<Vec<f64>> },
}

/// A finite metric space. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    geometry: Geometry,
    tolerance: f64,
    size: usize,
    dist: Vec<f64>,
}

/// Result of a minimax covering computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chebyshev {
    pub radius: f64,
    pub centers: PointSet,
}

impl MetricSpace {
    /// Builds a matrix space, rejecting any matrix that fails the metric axioms.
    pub fn from_matrix(d: Vec<Vec<f64>>, tolerance: f64) -> Result<Self> {
        check_tolerance(tolerance)?;
        if d.is_empty() {
            return Err(Error::InvalidSpace("space has no points".into()));
        }
        let violations = validate_metric(&d, tolerance)?;
        if !violations.is_empty() {
            return Err(Error::InvalidMetric(violations));
        }
        let size = d.len();
        let mut dist = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                // symmetrize; entries already agree within tolerance
                dist.push(if i == j { 0.0 } else { 0.5 * (d[i][j] + d[j][i]) });
            }
        }
        Ok(MetricSpace {
            geometry: Geometry::Matrix,
            tolerance,
            size,
            dist,
        })
    }

    pub fn embedded(points: Vec<Vec<f64>>, norm: Norm, tolerance: f64) -> Result<Self> {
        check_tolerance(tolerance)?;
        let Some(first) = points.first() else {
            return Err(Error::InvalidSpace("space has no points".into()));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidSpace("points must have at least one coordinate".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidSpace(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidSpace(format!("point {i} has a non-finite coordinate")));
            }
        }
        let size = points.len();
        let mut dist = vec![0.0; size * size];
        for i in 0..size {
            for j in i + 1..size {
                let v = norm.distance(&points[i], &points[j]);
                if v <= tolerance {
                    return Err(Error::InvalidMetric(vec![MetricViolation::Distinctness { i, j }]));
                }
                dist[i * size + j] = v;
                dist[j * size + i] = v;
            }
        }
        Ok(MetricSpace {
            geometry: Geometry::Embedded { norm, points },
            tolerance,
            size,
            dist,
        })
    }

    /// Points on the real line.
    pub fn line(coords: &[f64]) -> Result<Self> {
        Self::embedded(coords.iter().map(|&c| vec![c]).collect(), Norm::L2, DEFAULT_TOLERANCE)
    }

    /// The dyadic grid `{0} ∪ {2^-k : k = 0..=levels+1}` in ascending order.
    pub fn dyad(levels: u32) -> Self {
        let mut coords = vec![0.0];
        coords.extend((0..=levels + 1).rev().map(|k| 0.5f64.powi(k as i32)));
        Self::line(&coords).expect("dyadic grid is a valid line space")
    }

    pub fn from_spec(spec: &SpaceSpec) -> Result<Self> {
        match spec {
            SpaceSpec::Matrix { d, tolerance } => Self::from_matrix(d.clone(), tolerance.unwrap_or(DEFAULT_TOLERANCE)),
            SpaceSpec::Embedded {
                norm,
                points,
                tolerance,
            } => Self::embedded(points.clone(), *norm, tolerance.unwrap_or(DEFAULT_TOLERANCE)),
            SpaceSpec::Dyad { levels } => Ok(Self::dyad(*levels)),
        }
    }

    pub fn to_spec(&self) -> SpaceSpec {
        let tolerance = (self.tolerance != DEFAULT_TOLERANCE).then_some(self.tolerance);
        match &self.geometry {
            Geometry::Matrix => SpaceSpec::Matrix {
                d: self.distance_matrix(),
                tolerance,
            },
            Geometry::Embedded { norm, points } => SpaceSpec::Embedded {
                norm: *norm,
                points: points.clone(),
                tolerance,
            },
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Result<Self> {
        check_tolerance(tolerance)?;
        self.tolerance = tolerance;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.size + j]
    }

    pub fn is_embedded(&self) -> bool {
        matches!(self.geometry, Geometry::Embedded { .. })
    }

    pub fn norm(&self) -> Option<Norm> {
        match &self.geometry {
            Geometry::Embedded { norm, .. } => Some(*norm),
            Geometry::Matrix => None,
        }
    }

    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        match &self.geometry {
            Geometry::Embedded { points, .. } => points.get(i).map(Vec::as_slice),
            Geometry::Matrix => None,
        }
    }

    /// Distance from point `i` to an arbitrary location (embedded spaces only).
    pub fn d_to_coords(&self, i: usize, at: &[f64]) -> Option<f64> {
        match &self.geometry {
            Geometry::Embedded { norm, points } => Some(norm.distance(&points[i], at)),
            Geometry::Matrix => None,
        }
    }

    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        self.dist.chunks(self.size).map(<[f64]>::to_vec).collect()
    }

    pub fn all_points(&self) -> PointSet {
        PointSet::range(self.size)
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.size {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                size: self.size,
            })
        }
    }

    /// `d(i, A) = min_{a ∈ A} d(i, a)`.
    pub fn point_set_dist(&self, i: usize, a: &PointSet) -> f64 {
        a.iter().map(|k| self.d(i, k)).fold(f64::INFINITY, f64::min)
    }

    /// One-sided deviation `sup_{a ∈ A} d(a, B)`.
    pub fn excess(&self, a: &PointSet, b: &PointSet) -> f64 {
        a.iter().map(|i| self.point_set_dist(i, b)).fold(0.0, f64::max)
    }

    /// Hausdorff distance `D(A,B) = max{sup_A d(·,B), sup_B d(A,·)}`.
    pub fn hausdorff(&self, a: &PointSet, b: &PointSet) -> f64 {
        self.excess(a, b).max(self.excess(b, a))
    }

    /// All points of `A` attaining `d(i, A)` within tolerance, ascending.
    pub fn nearest_points(&self, i: usize, a: &PointSet) -> PointSet {
        let best = self.point_set_dist(i, a);
        PointSet::new(a.iter().filter(|&k| self.d(i, k) <= best + self.tolerance))
            .expect("the minimizer is always retained")
    }

    /// Smallest-index nearest point of `A` to `i`.
    pub fn nearest_point(&self, i: usize, a: &PointSet) -> usize {
        self.nearest_points(i, a).first()
    }

    /// Metric segment `[i, j] = {s : d(i,s) + d(s,j) = d(i,j)}`.
    pub fn metric_segment(&self, i: usize, j: usize) -> PointSet {
        let dij = self.d(i, j);
        PointSet::new((0..self.size).filter(|&s| self.d(i, s) + self.d(s, j) <= dij + self.tolerance))
            .expect("segment contains its endpoints")
    }

    /// Covering value of `z` over `A`: `max_{a ∈ A} d(z, a)`.
    pub fn covering_value(&self, z: usize, a: &PointSet) -> f64 {
        a.iter().map(|k| self.d(z, k)).fold(0.0, f64::max)
    }

    /// Minimax radius of `A` over the candidate pool `Z` with all minimizers.
    pub fn chebyshev(&self, a: &PointSet, pool: &PointSet) -> Chebyshev {
        let values: Vec<(usize, f64)> = pool.iter().map(|z| (z, self.covering_value(z, a))).collect();
        let radius = values.iter().map(|&(_, v)| v).fold(f64::INFINITY, f64::min);
        let centers = PointSet::new(
            values
                .iter()
                .filter(|&&(_, v)| v <= radius + self.tolerance)
                .map(|&(z, _)| z),
        )
        .expect("the minimizer is always retained");
        Chebyshev { radius, centers }
    }
}

fn check_tolerance(tolerance: f64) -> Result<()> {
    if tolerance >= 0.0 && tolerance.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSpace(format!(
            "tolerance {tolerance} must be a nonnegative real"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> PointSet {
        PointSet::new(v.iter().copied()).unwrap()
    }

    #[test]
    fn validate_two_point_metric() {
        let v = validate_metric(&[vec![0.0, 1.0], vec![1.0, 0.0]], 1e-9).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn validate_reports_asymmetry() {
        let v = validate_metric(&[vec![0.0, 1.0], vec![2.0, 0.0]], 1e-9).unwrap();
        assert!(matches!(v[0], MetricViolation::Symmetry { i: 0, j: 1, .. }));
    }

    #[test]
    fn validate_reports_triangle_triple() {
        let m = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]];
        let v = validate_metric(&m, 1e-9).unwrap();
        assert_eq!(
            v,
            vec![MetricViolation::Triangle {
                i: 0,
                j: 2,
                k: 1,
                dij: 3.0,
                via: 2.0
            }]
        );
        assert!(matches!(
            MetricSpace::from_matrix(m, 1e-9),
            Err(Error::InvalidMetric(_))
        ));
    }

    #[test]
    fn validate_rejects_ragged_matrix() {
        let err = validate_metric(&[vec![0.0, 1.0], vec![1.0]], 1e-9).unwrap_err();
        assert!(matches!(err, Error::NotSquare { row: 1, .. }));
    }

    #[test]
    fn point_set_distance_examples() {
        let line = MetricSpace::line(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(line.point_set_dist(0, &set(&[1, 2])), 1.0);
        assert_eq!(line.point_set_dist(1, &set(&[1, 2])), 0.0);
        let line = MetricSpace::line(&[0.0, 0.5, 2.0]).unwrap();
        assert_eq!(line.point_set_dist(2, &set(&[0, 1])), 1.5);
    }

    #[test]
    fn hausdorff_examples() {
        // indices are the coordinates 0, 1, 2
        let line = MetricSpace::line(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(line.hausdorff(&set(&[0, 1]), &set(&[0, 1])), 0.0);
        assert_eq!(line.hausdorff(&set(&[0, 1]), &set(&[0, 2])), 1.0);
        assert_eq!(line.hausdorff(&set(&[0]), &set(&[0, 2])), 2.0);
    }

    #[test]
    fn nearest_points_examples() {
        let line = MetricSpace::line(&[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(line.nearest_points(1, &set(&[0, 2])), set(&[0, 2]));
        assert_eq!(line.nearest_points(2, &set(&[1, 2])), set(&[2]));

        let dyad = MetricSpace::dyad(20);
        let at = |c: f64| (0..dyad.len()).find(|&i| dyad.coords(i).unwrap()[0] == c).unwrap();
        let half = at(0.5);
        assert_eq!(dyad.nearest_points(at(1.0), &set(&[half])), set(&[half]));
    }

    #[test]
    fn segment_examples() {
        let line = MetricSpace::line(&[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(line.metric_segment(1, 1), set(&[1]));
        assert_eq!(line.metric_segment(0, 2), set(&[0, 1, 2]));

        let plane = MetricSpace::embedded(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 0.3]],
            Norm::Linf,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        assert_eq!(plane.metric_segment(0, 1), set(&[0, 1, 2]));
        let euclid = MetricSpace::embedded(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 0.3]],
            Norm::L2,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        assert_eq!(euclid.metric_segment(0, 1), set(&[0, 1]));
    }

    #[test]
    fn chebyshev_examples() {
        let line = MetricSpace::line(&[0.0, 0.5, 1.0]).unwrap();
        let c = line.chebyshev(&set(&[2]), &line.all_points());
        assert_eq!((c.radius, c.centers), (0.0, set(&[2])));
        let c = line.chebyshev(&set(&[0, 2]), &line.all_points());
        assert_eq!((c.radius, c.centers), (0.5, set(&[1])));

        let line = MetricSpace::line(&[0.0, 1.0, 2.0]).unwrap();
        let c = line.chebyshev(&set(&[0, 2]), &line.all_points());
        assert_eq!((c.radius, c.centers), (1.0, set(&[1])));
    }

    #[test]
    fn norm_tags_round_trip() {
        for tag in ["l1", "l2", "linf", "l3"] {
            let n: Norm = tag.parse().unwrap();
            assert_eq!(n.to_string(), tag);
        }
        assert!("l0.5".parse::<Norm>().is_err());
        assert!("taxicab".parse::<Norm>().is_err());
    }

    #[test]
    fn duplicate_embedded_points_rejected() {
        let err = MetricSpace::line(&[0.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidMetric(_)));
    }

    #[test]
    fn empty_point_set_rejected() {
        assert!(matches!(PointSet::new([]), Err(Error::EmptySet)));
        assert!(serde_json::from_str::<PointSet>("[]").is_err());
        assert_eq!(serde_json::from_str::<PointSet>("[3,1,3]").unwrap(), set(&[1, 3]));
    }

    #[test]
    fn dyad_layout() {
        let d = MetricSpace::dyad(20);
        assert_eq!(d.len(), 23);
        assert_eq!(d.coords(0).unwrap()[0], 0.0);
        assert_eq!(d.coords(1).unwrap()[0], 0.5f64.powi(21));
        assert_eq!(d.coords(22).unwrap()[0], 1.0);
    }
}
