//! Auxiliary data for the descent conditions: potentials and second metrics.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{validate_metric, MetricSpace, DEFAULT_TOLERANCE};
use crate::multimap::{GraphPair, MultiMap};

/// Real potential on the domain with a finite lower bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    values: BTreeMap<usize, f64>,
    lower_bound: f64,
}

impl Potential {
    pub fn new(values: BTreeMap<usize, f64>, lower_bound: f64) -> Result<Self> {
        if !lower_bound.is_finite() {
            return Err(Error::InvalidParams("potential lower bound must be finite".into()));
        }
        for (&x, &v) in &values {
            if !v.is_finite() || v < lower_bound {
                return Err(Error::InvalidParams(format!(
                    "potential at {x} is {v}, below the lower bound {lower_bound}"
                )));
            }
        }
        Ok(Potential { values, lower_bound })
    }

    pub fn from_fn(map: &MultiMap, f: impl Fn(usize) -> f64) -> Result<Self> {
        let values: BTreeMap<usize, f64> = map.domain().iter().map(|x| (x, f(x))).collect();
        let lower = values.values().copied().fold(f64::INFINITY, f64::min);
        Self::new(values, lower.min(0.0))
    }

    /// `φ(x) = d(x, F(x))`.
    pub fn gap(map: &MultiMap) -> Self {
        Self::from_fn(map, |x| map.gap_of(x).expect("domain point")).expect("gaps are finite and nonnegative")
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn get(&self, x: usize) -> Option<f64> {
        self.values.get(&x).copied()
    }

    pub fn covers(&self, map: &MultiMap) -> Result<()> {
        match map.domain().iter().find(|x| !self.values.contains_key(x)) {
            Some(x) => Err(Error::InvalidParams(format!(
                "potential has no value at domain point {x}"
            ))),
            None => Ok(()),
        }
    }
}

/// A second metric `δ` on the universe: either `c·d` or an explicit table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaledMetric {
    Scaled { scale: f64 },
    Table { d: Vec<Vec<f64>> },
}

impl ScaledMetric {
    pub fn scaled(scale: f64) -> Result<Self> {
        if scale > 0.0 && scale.is_finite() {
            Ok(ScaledMetric::Scaled { scale })
        } else {
            Err(Error::InvalidParams(format!("metric scale {scale} must be positive")))
        }
    }

    pub fn table(d: Vec<Vec<f64>>, space: &MetricSpace) -> Result<Self> {
        if d.len() != space.len() {
            return Err(Error::InvalidParams(format!(
                "metric table has {} rows for a space of {} points",
                d.len(),
                space.len()
            )));
        }
        let violations = validate_metric(&d, space.tolerance())?;
        if !violations.is_empty() {
            return Err(Error::InvalidMetric(violations));
        }
        Ok(ScaledMetric::Table { d })
    }

    #[inline]
    pub fn d(&self, space: &MetricSpace, i: usize, j: usize) -> f64 {
        match self {
            ScaledMetric::Scaled { scale } => scale * space.d(i, j),
            ScaledMetric::Table { d } => d[i][j],
        }
    }

    pub fn check(&self, space: &MetricSpace) -> Result<()> {
        match self {
            ScaledMetric::Scaled { scale } => Self::scaled(*scale).map(|_| ()),
            ScaledMetric::Table { d } => Self::table(d.clone(), space).map(|_| ()),
        }
    }

    /// Extreme ratios `δ/d` over all distinct pairs: sampled evidence of
    /// bi-Lipschitz equivalence on the finite set.
    pub fn equivalence_bounds(&self, space: &MetricSpace) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..space.len() {
            for j in i + 1..space.len() {
                let r = self.d(space, i, j) / space.d(i, j);
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        (lo, hi)
    }
}

/// An explicit metric on the graph pairs of a map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphMetricTable", into = "GraphMetricTable")]
pub struct GraphMetric {
    pairs: Vec<GraphPair>,
    d: Vec<Vec<f64>>,
    index: HashMap<GraphPair, usize>,
}

#[derive(Serialize, Deserialize)]
struct GraphMetricTable {
    pairs: Vec<GraphPair>,
    d: Vec<Vec<f64>>,
}

impl TryFrom<GraphMetricTable> for GraphMetric {
    type Error = Error;
    fn try_from(t: GraphMetricTable) -> Result<Self> {
        GraphMetric::new(t.pairs, t.d, DEFAULT_TOLERANCE)
    }
}

impl From<GraphMetric> for GraphMetricTable {
    fn from(g: GraphMetric) -> Self {
        GraphMetricTable { pairs: g.pairs, d: g.d }
    }
}

impl GraphMetric {
    pub fn new(pairs: Vec<GraphPair>, d: Vec<Vec<f64>>, tolerance: f64) -> Result<Self> {
        if d.len() != pairs.len() {
            return Err(Error::InvalidParams(format!(
                "graph metric has {} rows for {} pairs",
                d.len(),
                pairs.len()
            )));
        }
        let violations = validate_metric(&d, tolerance)?;
        if !violations.is_empty() {
            return Err(Error::InvalidMetric(violations));
        }
        let index: HashMap<GraphPair, usize> = pairs.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        if index.len() != pairs.len() {
            return Err(Error::InvalidParams("graph metric lists a pair twice".into()));
        }
        Ok(GraphMetric { pairs, d, index })
    }

    /// `c · max{d(x,z), d(t,v)/k}` on `graph(F)`.
    pub fn product_max(map: &MultiMap, scale: f64, k: f64) -> Result<Self> {
        if !(scale > 0.0 && k > 0.0) {
            return Err(Error::InvalidParams("scale and k must be positive".into()));
        }
        let sp = map.space();
        let pairs = map.graph();
        let d = pairs
            .iter()
            .map(|p| {
                pairs
                    .iter()
                    .map(|q| scale * sp.d(p.x, q.x).max(sp.d(p.t, q.t) / k))
                    .collect()
            })
            .collect();
        Self::new(pairs, d, sp.tolerance())
    }

    pub fn pairs(&self) -> &[GraphPair] {
        &self.pairs
    }

    pub fn d(&self, p: GraphPair, q: GraphPair) -> Option<f64> {
        let (&i, &j) = (self.index.get(&p)?, self.index.get(&q)?);
        Some(self.d[i][j])
    }

    /// Checks that the table covers exactly `graph(F)`.
    pub fn covers(&self, map: &MultiMap) -> Result<()> {
        let graph = map.graph();
        if graph.len() != self.pairs.len() || graph.iter().any(|p| !self.index.contains_key(p)) {
            return Err(Error::InvalidParams("graph metric does not cover graph(F)".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances;

    #[test]
    fn product_max_is_a_metric_on_the_graph() {
        let dyad = instances::dyad();
        let g = GraphMetric::product_max(&dyad.map, 0.25, 0.75).unwrap();
        assert_eq!(g.pairs().len(), 22);
        g.covers(&dyad.map).unwrap();
        let (one, half) = (dyad.point_at(1.0), dyad.point_at(0.5));
        let quarter = dyad.point_at(0.25);
        let d = g.d(GraphPair::new(one, half), GraphPair::new(half, quarter)).unwrap();
        // 0.25 · max(0.5, 0.25/0.75)
        assert!((d - 0.125).abs() < 1e-15);
    }

    #[test]
    fn table_metric_must_satisfy_axioms() {
        let sp = MetricSpace::line(&[0.0, 1.0, 2.0]).unwrap();
        let bad = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert!(ScaledMetric::table(bad, &sp).is_err());
        let good = ScaledMetric::table(sp.distance_matrix(), &sp).unwrap();
        assert_eq!(good.equivalence_bounds(&sp), (1.0, 1.0));
    }

    #[test]
    fn potential_respects_lower_bound() {
        let m = instances::line_three();
        let err = Potential::new([(0, -1.0)].into_iter().collect(), 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidParams(_)));
        let p = Potential::gap(&m);
        assert_eq!(p.get(1), Some(1.0));
        p.covers(&m).unwrap();
    }
}
