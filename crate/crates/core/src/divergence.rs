//! Divergence: lengths of paths forced around a ball centered between two
//! points, the divergence function over a ball, growth classification and
//! the logarithmic-detour bound.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::graph::{MetricGraph, Vertex, VertexSet, EPS};
use crate::report::{Best, ConstantsReport, Real};
use crate::sampling::{rng_for, Mode};
use crate::shortest::{geodesic, shortest_path_masked, single_source};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceParams {
    /// Fraction of `r` forming the forbidden radius, in `(0, 1)`.
    pub delta: f64,
    /// Subtracted from the forbidden radius.
    pub gamma: f64,
    /// Forbid the closed ball instead of the open one.
    #[serde(default)]
    pub closed: bool,
}

impl DivergenceParams {
    pub fn new(delta: f64, gamma: f64) -> Result<Self, GraphError> {
        let p = DivergenceParams {
            delta,
            gamma,
            closed: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(GraphError::InvalidParameter(format!("delta {} not in (0,1)", self.delta)));
        }
        if self.gamma < 0.0 || !self.gamma.is_finite() {
            return Err(GraphError::InvalidParameter(format!("gamma {} is negative", self.gamma)));
        }
        Ok(())
    }

    /// `delta * r - gamma`.
    pub fn forbidden_radius(&self, r: f64) -> f64 {
        self.delta * r - self.gamma
    }

    fn ball_mask(&self, row_c: &[f64], rho: f64) -> Vec<bool> {
        row_c
            .iter()
            .map(|&d| if self.closed { d <= rho + EPS } else { d < rho - EPS })
            .collect()
    }
}

/// Length of the shortest path from `a` to `b` avoiding the ball around `c`
/// of radius `delta * r - gamma`, `r = d(c, {a, b})`; infinite when the ball
/// separates them.
pub fn div_point(g: &MetricGraph, a: Vertex, b: Vertex, c: Vertex, params: &DivergenceParams) -> Result<f64, GraphError> {
    params.validate()?;
    for v in [a, b, c] {
        g.check_vertex(v)?;
    }
    let row_c = g.distances_from(c);
    let r = row_c[a].min(row_c[b]);
    if r <= EPS {
        return Err(GraphError::InvalidParameter(format!("center {c} coincides with an endpoint")));
    }
    let rho = params.forbidden_radius(r);
    if rho <= 0.0 {
        return Ok(g.distance(a, b));
    }
    let mask = params.ball_mask(&row_c, rho);
    for v in [a, b] {
        if mask[v] {
            return Err(GraphError::Forbidden(v));
        }
    }
    Ok(single_source(g, a, Some(&mask))[b])
}

/// Supremum at one `n` over triples with `d(a, b) <= n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivRecord {
    pub n: usize,
    /// Largest finite value, or infinite when every triple separates.
    pub sup: Real,
    pub triple: Option<[Vertex; 3]>,
    pub infinite: usize,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub params: DivergenceParams,
    pub mode: String,
    pub pool: usize,
    pub records: Vec<DivRecord>,
}

impl DivergenceReport {
    /// `n,div_sup,infinite_count,samples` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,div_sup,infinite_count,samples\n");
        for r in &self.records {
            writeln!(s, "{},{},{},{}", r.n, r.sup, r.infinite, r.samples).unwrap();
        }
        s
    }

    /// `(n, sup)` for every record with a finite supremum.
    pub fn finite_points(&self) -> Vec<(f64, f64)> {
        self.records
            .iter()
            .filter(|r| r.sup.0.is_finite())
            .map(|r| (r.n as f64, r.sup.0))
            .collect()
    }
}

/// Default boundary margin for a ball of the given radius.
pub fn default_margin(radius: usize) -> usize {
    radius.div_ceil(3)
}

/// One evaluated triple `(a, b, c)` with `d(a, b)` and its value.
type Outcome = ([Vertex; 3], f64, f64);

fn exhaustive_outcomes(g: &MetricGraph, pool: &[Vertex], n_max: usize, params: &DivergenceParams) -> Vec<Outcome> {
    let limit = n_max as f64 + EPS;
    pool.par_iter()
        .enumerate()
        .flat_map_iter(|(i, &a)| {
            let row_a = g.distances_from(a);
            let partners: Vec<Vertex> = pool[i + 1..].iter().copied().filter(|&b| row_a[b] <= limit).collect();
            let mut out = Vec::new();
            for &c in pool {
                if c == a {
                    continue;
                }
                let row_c = g.distances_from(c);
                let mut groups: BTreeMap<u64, Vec<Vertex>> = BTreeMap::new();
                for &b in &partners {
                    if b == c {
                        continue;
                    }
                    let rho = params.forbidden_radius(row_c[a].min(row_c[b]));
                    if rho <= 0.0 {
                        out.push(([a, b, c], row_a[b], row_a[b]));
                    } else {
                        groups.entry(rho.to_bits()).or_default().push(b);
                    }
                }
                for (bits, bs) in groups {
                    let mask = params.ball_mask(&row_c, f64::from_bits(bits));
                    let row = single_source(g, a, Some(&mask));
                    out.extend(bs.into_iter().map(|b| ([a, b, c], row_a[b], row[b])));
                }
            }
            out
        })
        .collect()
}

fn sampled_outcomes(
    g: &MetricGraph,
    pool: &[Vertex],
    n_max: usize,
    params: &DivergenceParams,
    count: usize,
    seed: u64,
) -> Vec<Outcome> {
    if pool.len() < 3 {
        return Vec::new();
    }
    let mut rng = rng_for(seed, "divergence");
    let mut triples = Vec::with_capacity(count);
    let mut attempts = 0;
    while triples.len() < count && attempts < 50 * count {
        attempts += 1;
        let t = [0, 1, 2].map(|_| pool[rng.gen_range(0..pool.len())]);
        if t[0] != t[1] && t[2] != t[0] && t[2] != t[1] && g.distance(t[0], t[1]) <= n_max as f64 + EPS {
            triples.push(t);
        }
    }
    triples
        .par_iter()
        .map(|&t| (t, g.distance(t[0], t[1]), div_point(g, t[0], t[1], t[2], params).unwrap_or(f64::INFINITY)))
        .collect()
}

/// `Div(n)` for `n = 1..=n_max` over triples inside `pool`.
pub fn div_function(
    g: &MetricGraph,
    pool: &VertexSet,
    n_max: usize,
    params: &DivergenceParams,
    mode: Mode,
) -> Result<DivergenceReport, GraphError> {
    params.validate()?;
    if n_max < 2 {
        return Err(GraphError::InvalidParameter(format!("n_max {n_max} < 2")));
    }
    let outcomes = match mode {
        Mode::Exhaustive => exhaustive_outcomes(g, pool.as_slice(), n_max, params),
        Mode::Sampled { count, seed } => sampled_outcomes(g, pool.as_slice(), n_max, params, count, seed),
    };
    let mut by_n: Vec<(Best, usize, usize)> = vec![(Best::default(), 0, 0); n_max + 1];
    for (t, d, v) in &outcomes {
        let n = ((d - EPS).ceil().max(0.0) as usize).min(n_max);
        let slot = &mut by_n[n];
        slot.2 += 1;
        if v.is_finite() {
            slot.0.offer(*v, || (t.to_vec(), Vec::new(), String::new()));
        } else {
            slot.1 += 1;
        }
    }
    let mut records = Vec::with_capacity(n_max);
    let mut acc = (Best::default(), 0, 0);
    for (n, slot) in by_n.into_iter().enumerate() {
        acc = (acc.0.merge(slot.0), acc.1 + slot.1, acc.2 + slot.2);
        if n == 0 {
            continue;
        }
        let finite = acc.2 > acc.1;
        records.push(DivRecord {
            n,
            sup: Real(if finite || acc.2 == 0 { acc.0.value } else { f64::INFINITY }),
            triple: finite.then(|| [acc.0.vertices[0], acc.0.vertices[1], acc.0.vertices[2]]),
            infinite: acc.1,
            samples: acc.2,
        });
    }
    Ok(DivergenceReport {
        params: *params,
        mode: mode.tag(),
        pool: pool.len(),
        records,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Growth {
    Linear,
    SuperlinearSubexponential,
    ExponentialCompatible,
    Inconclusive,
}

/// Least-squares fits behind a growth verdict. Residuals are sums of
/// squared errors in the original scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub class: Growth,
    /// `y = slope n + intercept`.
    pub linear: (f64, f64),
    /// `y = a b^n`.
    pub exponential: (f64, f64),
    /// `y = a n^p`.
    pub power: (f64, f64),
    pub linear_residual: f64,
    pub exponential_residual: f64,
    pub power_residual: f64,
}

fn line_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

fn sse(pts: &[(f64, f64)], f: impl Fn(f64) -> f64) -> f64 {
    pts.iter().map(|&(x, y)| (f(x) - y).powi(2)).sum()
}

/// Compares linear, exponential and power-law fits; a fit wins when its
/// residual is at most half of the competitors'.
pub fn classify_growth(points: &[(f64, f64)]) -> Result<GrowthFit, GraphError> {
    if points.len() < 4 {
        return Err(GraphError::InvalidParameter(format!("{} points, need at least 4", points.len())));
    }
    let positive: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
    let linear = line_fit(points);
    let logy: Vec<(f64, f64)> = positive.iter().map(|p| (p.0, p.1.ln())).collect();
    let (lb, la) = line_fit(&logy);
    let exponential = (la.exp(), lb.exp());
    let loglog: Vec<(f64, f64)> = positive.iter().map(|p| (p.0.ln(), p.1.ln())).collect();
    let (pp, pa) = line_fit(&loglog);
    let power = (pa.exp(), pp);
    let floor = 1e-12 * points.iter().map(|p| p.1 * p.1).sum::<f64>().max(1.0);
    let lin = sse(points, |x| linear.0 * x + linear.1).max(floor);
    let exp = if positive.len() == points.len() {
        sse(points, |x| exponential.0 * exponential.1.powf(x)).max(floor)
    } else {
        f64::INFINITY
    };
    let pow = if positive.len() == points.len() {
        sse(points, |x| power.0 * x.powf(power.1)).max(floor)
    } else {
        f64::INFINITY
    };
    let class = if 2.0 * lin <= exp && (power.1 <= 1.2 || 2.0 * lin <= pow) {
        Growth::Linear
    } else if 2.0 * exp <= lin.min(pow) {
        Growth::ExponentialCompatible
    } else if power.1 > 1.2 && 2.0 * pow <= lin.min(exp) {
        Growth::SuperlinearSubexponential
    } else {
        Growth::Inconclusive
    };
    Ok(GrowthFit {
        class,
        linear,
        exponential,
        power,
        linear_residual: lin,
        exponential_residual: exp,
        power_residual: pow,
    })
}

/// A path from `x` to `y` avoiding the open ball of radius `rho` around the
/// midpoint `c` of the canonical geodesic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detour {
    pub x: Vertex,
    pub y: Vertex,
    pub c: Vertex,
    pub rho: f64,
    /// `d(c, beta)`.
    pub distance: f64,
    /// `l(beta)`.
    pub length: f64,
}

/// Least integer `C >= 1` with `d(c, beta) <= C log2 l(beta) + C` over
/// seeded detours between pool pairs at distance at least 4.
pub fn check_log_detour(g: &MetricGraph, pool: &VertexSet, count: usize, seed: u64) -> (ConstantsReport, Vec<Detour>) {
    let p = pool.as_slice();
    let mut rng = rng_for(seed, "log-detour");
    let mut detours = Vec::with_capacity(count);
    let mut attempts = 0;
    while detours.len() < count && attempts < 50 * count.max(1) && p.len() >= 2 {
        attempts += 1;
        let (x, y) = (p[rng.gen_range(0..p.len())], p[rng.gen_range(0..p.len())]);
        if g.distance(x, y) < 4.0 {
            continue;
        }
        let alpha = geodesic(g, x, y);
        let c = alpha.vertices[alpha.len() / 2];
        let row_c = g.distances_from(c);
        let r = row_c[x].min(row_c[y]).floor() as usize;
        let rho = rng.gen_range(1..=r) as f64;
        let mask: Vec<bool> = row_c.iter().map(|&d| d < rho - EPS).collect();
        if let Some(beta) = shortest_path_masked(g, x, y, Some(&mask)) {
            let distance = beta.vertices.iter().map(|&v| row_c[v]).fold(f64::INFINITY, f64::min);
            detours.push(Detour {
                x,
                y,
                c,
                rho,
                distance,
                length: beta.length(),
            });
        }
    }
    let mut best = Best::default();
    for d in &detours {
        let need = (d.distance / (d.length.log2() + 1.0) - EPS).ceil().max(1.0);
        best.offer(need, || (vec![d.x, d.y, d.c], Vec::new(), format!("d={} l={}", d.distance, d.length)));
    }
    let mut report = ConstantsReport::new("log-detour", Mode::Sampled { count, seed }.tag());
    report.set("C", &best);
    report.set_samples("detours", detours.len());
    if detours.len() < count {
        report.note(format!("found {} of {count} detours", detours.len()));
    }
    (report, detours)
}
