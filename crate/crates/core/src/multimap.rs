//! Set-valued maps `F: X → 2^Y` on a finite universe `Y` with domain `X ⊂ Y`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{MetricSpace, PointSet};

/// A pair `(x, t)` of the graph, `t ∈ F(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphPair {
    pub x: usize,
    pub t: usize,
}

impl GraphPair {
    pub fn new(x: usize, t: usize) -> Self {
        GraphPair { x, t }
    }
}

/// Map object as it appears in problem files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapSpec {
    Table {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        domain: Option<Vec<usize>>,
        values: BTreeMap<String, Vec<usize>>,
    },
    Rule {
        rule: MapRule,
        #[serde(default)]
        params: serde_json::Value,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapRule {
    /// `F(x) = {x/2}` on every point whose half is also a point of the line.
    Halve,
    Identity,
    /// `F(x) = {params.target}`.
    Constant,
}

/// A total set-valued map on a finite domain. Values may leave the domain.
#[derive(Debug, Clone)]
pub struct MultiMap {
    space: Arc<MetricSpace>,
    domain: PointSet,
    values: Vec<PointSet>,
    slot: Vec<Option<usize>>,
    gaps: Vec<f64>,
}

impl MultiMap {
    /// `values[k]` is `F(domain[k])`.
    pub fn new(space: Arc<MetricSpace>, domain: PointSet, values: Vec<PointSet>) -> Result<Self> {
        domain.check_range(space.len())?;
        if values.len() != domain.len() {
            return Err(Error::InvalidMap(format!(
                "{} value sets for a domain of {} points",
                values.len(),
                domain.len()
            )));
        }
        for v in &values {
            v.check_range(space.len())?;
        }
        let mut slot = vec![None; space.len()];
        for (k, x) in domain.iter().enumerate() {
            slot[x] = Some(k);
        }
        let gaps = domain
            .iter()
            .zip(&values)
            .map(|(x, fx)| space.point_set_dist(x, fx))
            .collect();
        Ok(MultiMap {
            space,
            domain,
            values,
            slot,
            gaps,
        })
    }

    /// Builds a map from `(x, F(x))` rows; the domain is the set of keys.
    pub fn from_table<I, V>(space: Arc<MetricSpace>, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, V)>,
        V: IntoIterator<Item = usize>,
    {
        let mut table = BTreeMap::new();
        for (x, v) in rows {
            let set = PointSet::new(v).map_err(|_| Error::EmptyValue(x))?;
            if table.insert(x, set).is_some() {
                return Err(Error::InvalidMap(format!("point {x} listed twice")));
            }
        }
        if table.is_empty() {
            return Err(Error::InvalidMap("empty domain".into()));
        }
        let domain = PointSet::new(table.keys().copied())?;
        Self::new(space, domain, table.into_values().collect())
    }

    pub fn from_spec(space: Arc<MetricSpace>, spec: &MapSpec) -> Result<Self> {
        match spec {
            MapSpec::Table { domain, values } => {
                let mut rows = Vec::with_capacity(values.len());
                for (key, v) in values {
                    let x: usize = key
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidMap(format!("values.{key}: not a point index")))?;
                    space.check_index(x)?;
                    rows.push((x, v.clone()));
                }
                let map = Self::from_table(space, rows)?;
                if let Some(domain) = domain {
                    let declared =
                        PointSet::new(domain.iter().copied()).map_err(|_| Error::InvalidMap("domain: empty".into()))?;
                    if declared != map.domain {
                        let missing = declared.iter().find(|&x| !map.in_domain(x));
                        return Err(match missing {
                            Some(x) => Error::InvalidMap(format!("values.{x}: missing")),
                            None => Error::InvalidMap("values: keys outside the declared domain".into()),
                        });
                    }
                }
                Ok(map)
            }
            MapSpec::Rule { rule, params } => Self::from_rule(space, *rule, params),
        }
    }

    /// Materializes a rule-defined map into a table.
    pub fn from_rule(space: Arc<MetricSpace>, rule: MapRule, params: &serde_json::Value) -> Result<Self> {
        let n = space.len();
        match rule {
            MapRule::Identity => Self::from_table(space, (0..n).map(|x| (x, [x]))),
            MapRule::Constant => {
                let target = params
                    .get("target")
                    .and_then(serde_json::Value::as_u64)
                    .ok_or_else(|| Error::InvalidMap("params.target: required".into()))?
                    as usize;
                space.check_index(target)?;
                Self::from_table(space, (0..n).map(|x| (x, [target])))
            }
            MapRule::Halve => {
                if space.coords(0).map(<[f64]>::len) != Some(1) {
                    return Err(Error::InvalidMap(
                        "rule halve needs a one-dimensional embedded space".into(),
                    ));
                }
                let tol = space.tolerance();
                let coord = |i: usize| space.coords(i).expect("embedded")[0];
                let mut rows = Vec::new();
                for x in 0..n {
                    let half = coord(x) / 2.0;
                    if let Some(y) = (0..n).find(|&y| (coord(y) - half).abs() <= tol) {
                        rows.push((x, [y]));
                    }
                }
                Self::from_table(space, rows)
            }
        }
    }

    pub fn to_spec(&self) -> MapSpec {
        MapSpec::Table {
            domain: Some(self.domain.as_slice().to_vec()),
            values: self
                .domain
                .iter()
                .zip(&self.values)
                .map(|(x, v)| (x.to_string(), v.as_slice().to_vec()))
                .collect(),
        }
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    pub fn domain(&self) -> &PointSet {
        &self.domain
    }

    pub fn tolerance(&self) -> f64 {
        self.space.tolerance()
    }

    pub fn in_domain(&self, x: usize) -> bool {
        self.slot.get(x).is_some_and(Option::is_some)
    }

    /// `F(x)`, or `None` outside the domain.
    pub fn value(&self, x: usize) -> Option<&PointSet> {
        self.slot.get(x).copied().flatten().map(|k| &self.values[k])
    }

    pub fn values(&self, x: usize) -> Result<&PointSet> {
        self.value(x).ok_or(Error::NotInDomain(x))
    }

    /// `(x, F(x))` for every domain point, ascending.
    pub fn rows(&self) -> impl Iterator<Item = (usize, &PointSet)> + '_ {
        self.domain.iter().zip(&self.values)
    }

    pub fn is_fixed(&self, x: usize) -> bool {
        self.value(x).is_some_and(|v| v.contains(x))
    }

    /// Gap function `d(F(x), x)`.
    pub fn gap(&self, x: usize) -> Result<f64> {
        self.gap_of(x).ok_or(Error::NotInDomain(x))
    }

    /// Gap at `x`, `None` when `x` lies outside the domain.
    pub fn gap_of(&self, x: usize) -> Option<f64> {
        self.slot.get(x).copied().flatten().map(|k| self.gaps[k])
    }

    /// Whether every value lies inside the domain.
    pub fn is_self_map(&self) -> bool {
        self.values.iter().all(|v| v.iter().all(|t| self.in_domain(t)))
    }

    /// Brute-force fixed point set: every `x` with `x ∈ F(x)`.
    pub fn fixed_points(&self) -> Vec<usize> {
        self.domain.iter().filter(|&x| self.is_fixed(x)).collect()
    }

    /// Smallest `α` with `D(F(x),F(y)) ≤ α d(x,y)` over the domain, with the
    /// pair attaining it. Singleton domains give `0`.
    pub fn lipschitz_witness(&self) -> (f64, Option<(usize, usize)>) {
        let pts = self.domain.as_slice();
        let mut best = (0.0, None);
        for (a, &x) in pts.iter().enumerate() {
            for (b, &y) in pts.iter().enumerate().skip(a + 1) {
                let ratio = self.space.hausdorff(&self.values[a], &self.values[b]) / self.space.d(x, y);
                if ratio > best.0 {
                    best = (ratio, Some((x, y)));
                }
            }
        }
        best
    }

    pub fn lipschitz_estimate(&self) -> f64 {
        self.lipschitz_witness().0
    }

    /// All graph pairs ordered by `x` then `t`.
    pub fn graph(&self) -> Vec<GraphPair> {
        self.rows()
            .flat_map(|(x, v)| v.iter().map(move |t| GraphPair::new(x, t)))
            .collect()
    }

    pub fn contains_pair(&self, p: GraphPair) -> bool {
        self.value(p.x).is_some_and(|v| v.contains(p.t))
    }

    /// `d(z, F(x))` for any universe point `z`.
    pub fn dist_to_value(&self, z: usize, x: usize) -> Result<f64> {
        Ok(self.space.point_set_dist(z, self.values(x)?))
    }
}
