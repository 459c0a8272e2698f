//! Sampled estimation of the bead modulus: the largest `δ` for which the
//! intersection of two `(r+δ)`-balls around points `β` apart fits inside one
//! `(r−δ)`-ball.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::trial_rng;
use crate::metric::{MetricSpace, Norm};

/// Moduli at or below this fraction of `r` count as zero and carry a failure
/// certificate.
pub const VANISHING: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeadSampler {
    /// Rejection samples per pair and per tested `δ`.
    pub samples_per_pair: usize,
    /// Directions on each bounding sphere (planar spaces only).
    pub boundary_directions: usize,
    /// Bisection rounds for the search over `δ`.
    pub search_rounds: u32,
    pub seed: u64,
}

impl Default for BeadSampler {
    fn default() -> Self {
        BeadSampler {
            samples_per_pair: 10_000,
            boundary_directions: 256,
            search_rounds: 40,
            seed: 0,
        }
    }
}

/// The ball center that covers an intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeadCenter {
    Midpoint(Vec<f64>),
    Point(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeadWitness {
    pub x: usize,
    pub y: usize,
    pub z: BeadCenter,
    /// Largest `δ` this pair supports.
    pub delta: f64,
}

/// A pair whose intersection escapes every candidate ball at `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeadFailure {
    pub x: usize,
    pub y: usize,
    pub delta: f64,
    /// Sampled intersection point farthest from the center.
    pub escape: Vec<f64>,
    pub escape_distance: f64,
    /// Two intersection samples whose distance exceeds `2(r−δ)`, when found:
    /// no ball of radius `r−δ` holds both.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spread: Option<(Vec<f64>, Vec<f64>, f64)>,
    pub reverified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeadCertificate {
    pub r: f64,
    pub beta: f64,
    pub delta: f64,
    /// No pair is at least `β` apart.
    pub vacuous: bool,
    pub witnesses: Vec<BeadWitness>,
    pub sampled_points: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<BeadFailure>,
}

/// Outcome of testing one pair at one `δ`.
struct Probe {
    ok: bool,
    samples: u64,
    worst: Vec<f64>,
    worst_distance: f64,
    center: BeadCenter,
}

struct Planar<'a> {
    space: &'a MetricSpace,
    norm: Norm,
    cfg: &'a BeadSampler,
    r: f64,
}

impl Planar<'_> {
    fn r_plus(&self, delta: f64) -> f64 {
        self.r + delta
    }

    fn r_minus(&self, delta: f64) -> f64 {
        self.r - delta
    }

    fn inside(&self, w: &[f64], x: &[f64], y: &[f64], radius: f64) -> bool {
        let tol = self.space.tolerance();
        self.norm.distance(w, x) <= radius + tol && self.norm.distance(w, y) <= radius + tol
    }

    /// Point at norm-distance `radius` from `c` in the direction of angle `theta`.
    fn on_sphere(&self, c: &[f64], theta: f64, radius: f64) -> Vec<f64> {
        let u = [theta.cos(), theta.sin()];
        let len = self.norm.length(&u);
        vec![c[0] + radius * u[0] / len, c[1] + radius * u[1] / len]
    }

    /// Structured samples on the boundary of the intersection: a grid of
    /// directions on both spheres plus the bisected points where each sphere
    /// enters the other ball.
    fn boundary(&self, x: &[f64], y: &[f64], radius: f64) -> Vec<Vec<f64>> {
        let k = self.cfg.boundary_directions.max(8);
        let mut out = Vec::new();
        for (c, other) in [(x, y), (y, x)] {
            let theta = |i: usize| std::f64::consts::TAU * i as f64 / k as f64;
            let member = |t: f64| self.norm.distance(&self.on_sphere(c, t, radius), other) <= radius;
            for i in 0..k {
                let (t0, t1) = (theta(i), theta(i + 1));
                let (m0, m1) = (member(t0), member(t1));
                if m0 {
                    out.push(self.on_sphere(c, t0, radius));
                }
                if m0 != m1 {
                    let (mut lo, mut hi) = if m0 { (t0, t1) } else { (t1, t0) };
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if member(mid) {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    out.push(self.on_sphere(c, lo, radius));
                }
            }
        }
        out
    }

    fn probe(&self, x: usize, y: usize, delta: f64, stream: u64, budget: usize) -> Probe {
        let sp = self.space;
        let (px, py) = (sp.coords(x).expect("embedded"), sp.coords(y).expect("embedded"));
        let big = self.r_plus(delta);
        let small = self.r_minus(delta);
        let z: Vec<f64> = px.iter().zip(py).map(|(a, b)| 0.5 * (a + b)).collect();
        let mut samples = 0u64;
        let mut worst = z.clone();
        let mut worst_distance = 0.0;
        let mut consider = |w: Vec<f64>| {
            samples += 1;
            let dz = self.norm.distance(&w, &z);
            if dz > worst_distance {
                worst_distance = dz;
                worst = w;
            }
        };
        if px.len() == 2 {
            for w in self.boundary(px, py, big) {
                consider(w);
            }
        }
        // Rejection sampling from the overlap of the two bounding boxes; every
        // l_p ball with p ≥ 1 sits inside the l∞ box of the same radius.
        let lo: Vec<f64> = px.iter().zip(py).map(|(a, b)| a.max(*b) - big).collect();
        let hi: Vec<f64> = px.iter().zip(py).map(|(a, b)| a.min(*b) + big).collect();
        if lo.iter().zip(&hi).all(|(l, h)| l <= h) {
            let mut rng = trial_rng(self.cfg.seed, stream);
            let mut w = vec![0.0; px.len()];
            for _ in 0..budget {
                for (k, c) in w.iter_mut().enumerate() {
                    *c = if hi[k] > lo[k] {
                        rng.random_range(lo[k]..=hi[k])
                    } else {
                        lo[k]
                    };
                }
                if self.inside(&w, px, py, big) {
                    consider(w.clone());
                }
            }
        }
        Probe {
            ok: worst_distance <= small + sp.tolerance(),
            samples,
            worst,
            worst_distance,
            center: BeadCenter::Midpoint(z),
        }
    }

    /// Pair of boundary samples farther apart than `2(r−δ)`.
    fn spread(&self, x: usize, y: usize, delta: f64) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let sp = self.space;
        let (px, py) = (sp.coords(x)?, sp.coords(y)?);
        if px.len() != 2 {
            return None;
        }
        let pts = self.boundary(px, py, self.r_plus(delta));
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let d = self.norm.distance(&pts[i], &pts[j]);
                if best.is_none_or(|b| d > b.2) {
                    best = Some((i, j, d));
                }
            }
        }
        let (i, j, d) = best?;
        (d > 2.0 * self.r_minus(delta) + sp.tolerance()).then(|| (pts[i].clone(), pts[j].clone(), d))
    }
}

/// Matrix spaces: the intersection is the finite set of points within `r+δ`
/// of both, and any point of the space may serve as center.
fn probe_finite(space: &MetricSpace, x: usize, y: usize, r: f64, delta: f64) -> Probe {
    let tol = space.tolerance();
    let inter: Vec<usize> = (0..space.len())
        .filter(|&w| space.d(w, x) <= r + delta + tol && space.d(w, y) <= r + delta + tol)
        .collect();
    let cover = |z: usize| inter.iter().map(|&w| space.d(w, z)).fold(0.0, f64::max);
    let (z, value) = (0..space.len())
        .map(|z| (z, cover(z)))
        .fold((0, f64::INFINITY), |best, c| if c.1 < best.1 { c } else { best });
    let worst = inter
        .iter()
        .copied()
        .max_by(|&a, &b| space.d(a, z).total_cmp(&space.d(b, z)))
        .unwrap_or(z);
    Probe {
        ok: value <= r - delta + tol,
        samples: inter.len() as u64,
        worst: vec![worst as f64],
        worst_distance: value,
        center: BeadCenter::Point(z),
    }
}

/// Estimates the bead modulus of `space` at `(r, β)`.
///
/// Pairs range over the points of the space at distance at least `β`. For
/// embedded spaces the candidate center is the coordinate midpoint and the
/// intersection is sampled; matrix spaces are checked exactly over their
/// points.
pub fn bead_modulus(space: &MetricSpace, r: f64, beta: f64, sampler: &BeadSampler) -> Result<BeadCertificate> {
    if !(r > 0.0 && beta > 0.0 && r.is_finite() && beta.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "r = {r} and beta = {beta} must be positive"
        )));
    }
    if sampler.samples_per_pair == 0 || sampler.search_rounds == 0 {
        return Err(Error::InvalidParams("the sampling budget must be positive".into()));
    }
    let tol = space.tolerance();
    let pairs: Vec<(usize, usize)> = (0..space.len())
        .flat_map(|x| (x + 1..space.len()).map(move |y| (x, y)))
        .filter(|&(x, y)| space.d(x, y) >= beta - tol)
        .collect();
    if pairs.is_empty() {
        return Ok(BeadCertificate {
            r,
            beta,
            delta: r,
            vacuous: true,
            witnesses: Vec::new(),
            sampled_points: 0,
            failure: None,
        });
    }

    let cfg = sampler;
    let planar = space.norm().map(|norm| Planar { space, norm, cfg, r });
    // Translation invariance: embedded pairs with the same displacement behave
    // identically, so one representative per displacement is searched.
    let reps: Vec<(usize, usize)> = match &planar {
        Some(_) => {
            let mut seen = BTreeMap::new();
            for &(x, y) in &pairs {
                seen.entry(displacement(space, x, y)).or_insert((x, y));
            }
            let mut v: Vec<_> = seen.into_values().collect();
            v.sort();
            v
        }
        None => pairs.clone(),
    };
    let probe = |k: usize, delta: f64, round: u64, scale: usize| -> Probe {
        let (x, y) = reps[k];
        match &planar {
            Some(p) => p.probe(x, y, delta, ((k as u64) << 32) | round, cfg.samples_per_pair * scale),
            None => probe_finite(space, x, y, r, delta),
        }
    };
    // Largest passing δ in [lo, hi] and the smallest failing one, if any.
    let search = |k: usize, lo: f64, hi: f64, first_round: u64| -> (f64, Option<f64>, u64) {
        let top = probe(k, hi, first_round, 1);
        if top.ok {
            return (hi, None, top.samples);
        }
        let (mut lo, mut hi, mut samples) = (lo, hi, top.samples);
        for round in 1..=cfg.search_rounds as u64 {
            let mid = 0.5 * (lo + hi);
            let p = probe(k, mid, first_round + round, 1);
            samples += p.samples;
            if p.ok {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, Some(hi), samples)
    };

    let mut results: Vec<(f64, Option<f64>, u64)> =
        (0..reps.len()).into_par_iter().map(|k| search(k, 0.0, r, 0)).collect();
    let mut sampled_points: u64 = results.iter().map(|p| p.2).sum();
    let mut delta = results.iter().map(|p| p.0).fold(r, f64::min);

    // Confirm every pair at the chosen δ with fresh samples. Sampling is not
    // monotone in δ, so a pair failing here is searched again below δ.
    let mut pass = 1u64;
    loop {
        let failing = (0..reps.len()).find(|&k| {
            let p = probe(k, delta, (pass << 20) | 1, 1);
            sampled_points += p.samples;
            !p.ok
        });
        match failing {
            Some(k) if delta > 0.0 => {
                let (lo, hi, n) = search(k, 0.0, delta, pass << 20 | 2);
                sampled_points += n;
                results[k] = (lo, hi, results[k].2 + n);
                delta = lo;
                pass += 1;
            }
            _ => break,
        }
    }

    let witnesses = reps
        .iter()
        .enumerate()
        .map(|(k, &(x, y))| BeadWitness {
            x,
            y,
            z: probe(k, delta, u64::MAX >> 1, 1).center,
            delta: results[k].0,
        })
        .collect();

    let binding = (0..reps.len())
        .filter(|&k| results[k].1.is_some())
        .min_by(|&a, &b| results[a].0.total_cmp(&results[b].0));
    let failure = binding.filter(|_| delta <= VANISHING * r).map(|k| {
        let (x, y) = reps[k];
        let fd = results[k].1.expect("filtered");
        let first = probe(k, fd, u64::MAX - 1, 1);
        let again = probe(k, fd, u64::MAX, 10);
        sampled_points += first.samples + again.samples;
        BeadFailure {
            x,
            y,
            delta: fd,
            escape: first.worst,
            escape_distance: first.worst_distance,
            spread: planar.as_ref().and_then(|p| p.spread(x, y, fd)),
            reverified: !again.ok,
        }
    });

    Ok(BeadCertificate {
        r,
        beta,
        delta,
        vacuous: false,
        witnesses,
        sampled_points,
        failure,
    })
}

fn displacement(space: &MetricSpace, x: usize, y: usize) -> Vec<i64> {
    let (a, b) = (space.coords(x).expect("embedded"), space.coords(y).expect("embedded"));
    let q = |v: f64| (v / space.tolerance().max(1e-12)).round() as i64;
    let fwd: Vec<i64> = a.iter().zip(b).map(|(p, s)| q(s - p)).collect();
    let back: Vec<i64> = fwd.iter().map(|v| -v).collect();
    fwd.min(back)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(norm: Norm, pts: &[[f64; 2]]) -> MetricSpace {
        MetricSpace::embedded(pts.iter().map(|p| p.to_vec()).collect(), norm, 1e-9).unwrap()
    }

    fn quick() -> BeadSampler {
        BeadSampler {
            samples_per_pair: 2_000,
            ..Default::default()
        }
    }

    #[test]
    fn euclidean_matches_the_midpoint_bound() {
        let sp = plane(Norm::L2, &[[0.0, 0.0], [1.0, 0.0]]);
        let c = bead_modulus(&sp, 1.0, 1.0, &quick()).unwrap();
        assert!(!c.vacuous);
        assert!((c.delta - 1.0 / 16.0).abs() < 1e-6, "delta {}", c.delta);
        assert_eq!(c.witnesses[0].z, BeadCenter::Midpoint(vec![0.5, 0.0]));
    }

    #[test]
    fn max_norm_has_no_room() {
        let sp = plane(Norm::Linf, &[[0.0, 0.0], [1.0, 0.0]]);
        let c = bead_modulus(&sp, 1.0, 1.0, &quick()).unwrap();
        assert!(c.delta < 1e-8);
        let f = c.failure.unwrap();
        assert_eq!((f.x, f.y), (0, 1));
        assert!(f.reverified);
        let (_, _, spread) = f.spread.unwrap();
        assert!((spread - 2.0 * (1.0 + f.delta)).abs() < 1e-6);
    }

    #[test]
    fn far_beta_is_vacuous() {
        let sp = plane(Norm::L2, &[[0.0, 0.0], [1.0, 0.0]]);
        let c = bead_modulus(&sp, 0.5, 3.0, &quick()).unwrap();
        assert!(c.vacuous);
        assert_eq!(c.delta, 0.5);
    }

    #[test]
    fn matrix_spaces_are_checked_exactly() {
        let sp = MetricSpace::line(&[0.0, 0.5, 1.0]).unwrap();
        let m = MetricSpace::from_matrix(sp.distance_matrix(), 1e-9).unwrap();
        let c = bead_modulus(&m, 1.0, 1.0, &quick()).unwrap();
        // all three points lie within 1 of both ends; the middle covers them within 0.5
        assert!((c.delta - 0.5).abs() < 1e-8);
        assert_eq!(c.witnesses[0].z, BeadCenter::Point(1));
    }

    #[test]
    fn rejects_bad_input() {
        let sp = plane(Norm::L2, &[[0.0, 0.0], [1.0, 0.0]]);
        assert!(bead_modulus(&sp, 0.0, 1.0, &quick()).is_err());
        let zero = BeadSampler {
            samples_per_pair: 0,
            ..Default::default()
        };
        assert!(bead_modulus(&sp, 1.0, 1.0, &zero).is_err());
    }
}
