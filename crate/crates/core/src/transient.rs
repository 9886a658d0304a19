//! Deep/transient decomposition of paths and the checks built on it: the
//! relative Rips condition, the peripheral clause of the transient
//! characterization, triangle classification, stability of transient sets
//! under perturbation and the guessing-geodesics audit.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::graph::{MetricGraph, PathInSpace, Vertex, VertexSet, EPS};
use crate::metric::LocalMetric;
use crate::peripherals::{check_alpha1_with_diameter, diameter_estimate, requirement, PeripheralFamily};
use crate::report::{Best, ConstantsReport, Real, Witness};
use crate::sampling::{rng_for, Mode};
use crate::shortest::{geodesic, geodesic_family, multi_source, side_geodesics};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransientParams {
    /// Neighborhood radius around peripheral sets.
    pub mu: f64,
    /// Minimal distance from a deep point to both witnesses.
    pub c: f64,
    /// Measure witness distances along the path instead of in the graph.
    #[serde(default)]
    pub arclength: bool,
}

impl TransientParams {
    pub fn new(mu: f64, c: f64) -> Self {
        TransientParams {
            mu,
            c,
            arclength: false,
        }
    }
}

/// For every vertex, the members within a fixed radius and their distances,
/// sorted by member index.
#[derive(Clone, Debug)]
pub struct FamilyIndex {
    radius: f64,
    near: Vec<Vec<(usize, f64)>>,
}

impl FamilyIndex {
    pub fn new(g: &MetricGraph, fam: &PeripheralFamily, radius: f64) -> Self {
        let balls: Vec<Vec<(Vertex, f64)>> = fam
            .members
            .par_iter()
            .map(|m| multi_source(g, m.as_slice(), radius))
            .collect();
        let mut near = vec![Vec::new(); g.vertex_count()];
        for (i, ball) in balls.into_iter().enumerate() {
            for (v, d) in ball {
                near[v].push((i, d));
            }
        }
        FamilyIndex { radius, near }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Members within the index radius of `v`, with distances.
    pub fn near(&self, v: Vertex) -> &[(usize, f64)] {
        &self.near[v]
    }

    /// Members within `r <= radius` of `v`.
    pub fn within(&self, v: Vertex, r: f64) -> impl Iterator<Item = usize> + '_ {
        self.near[v].iter().filter(move |&&(_, d)| d <= r + EPS).map(|&(i, _)| i)
    }

    /// `d(v, P_i)` if it is at most the index radius.
    pub fn distance(&self, v: Vertex, i: usize) -> Option<f64> {
        self.near[v]
            .binary_search_by_key(&i, |&(m, _)| m)
            .ok()
            .map(|k| self.near[v][k].1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeepComponent {
    pub member: usize,
    /// First and last path index, inclusive.
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransientDecomposition {
    pub path: PathInSpace,
    /// Sorted indices of transient path vertices.
    pub transient: Vec<usize>,
    pub deep_components: Vec<DeepComponent>,
}

impl TransientDecomposition {
    pub fn transient_vertices(&self) -> VertexSet {
        self.transient.iter().map(|&i| self.path.vertices[i]).collect()
    }

    pub fn is_transient(&self, i: usize) -> bool {
        self.transient.binary_search(&i).is_ok()
    }

    /// Member tag of every path index, `None` for transient indices.
    pub fn tags(&self) -> Vec<Option<usize>> {
        let mut tags = vec![None; self.path.len()];
        for c in &self.deep_components {
            for t in &mut tags[c.start..=c.end] {
                *t = Some(c.member);
            }
        }
        tags
    }
}

/// Splits `path` into transient points and deep components.
pub fn decompose(
    g: &MetricGraph,
    fam: &PeripheralFamily,
    path: &PathInSpace,
    params: &TransientParams,
) -> TransientDecomposition {
    let index = FamilyIndex::new(g, fam, params.mu);
    decompose_indexed(g, &index, path, params)
}

/// As [`decompose`], reusing an index whose radius is at least `mu`.
pub fn decompose_indexed(
    g: &MetricGraph,
    index: &FamilyIndex,
    path: &PathInSpace,
    params: &TransientParams,
) -> TransientDecomposition {
    debug_assert!(index.radius() + EPS >= params.mu);
    let n = path.len();
    let mut near_idx: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (j, &v) in path.vertices.iter().enumerate() {
        for m in index.within(v, params.mu) {
            near_idx.entry(m).or_default().push(j);
        }
    }
    let mut tags: Vec<Option<usize>> = vec![None; n];
    if near_idx.values().any(|l| l.len() >= 2) {
        for (i, tag) in tags.iter_mut().enumerate() {
            let close: Option<HashSet<Vertex>> = (!params.arclength).then(|| {
                multi_source(g, &[path.vertices[i]], params.c)
                    .into_iter()
                    .map(|(v, _)| v)
                    .collect()
            });
            let far = |j: usize| match &close {
                Some(set) => !set.contains(&path.vertices[j]),
                None => path.arclength(i.min(j), i.max(j)) > params.c + EPS,
            };
            for (&m, list) in &near_idx {
                let before = list.iter().take_while(|&&j| j < i).any(|&j| far(j));
                if before && list.iter().rev().take_while(|&&j| j > i).any(|&j| far(j)) {
                    *tag = Some(m);
                    break;
                }
            }
        }
    }
    let mut transient = Vec::new();
    let mut deep_components: Vec<DeepComponent> = Vec::new();
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            None => transient.push(i),
            Some(m) => match deep_components.last_mut() {
                Some(c) if c.member == *m && c.end + 1 == i => c.end = i,
                _ => deep_components.push(DeepComponent {
                    member: *m,
                    start: i,
                    end: i,
                }),
            },
        }
    }
    TransientDecomposition {
        path: path.clone(),
        transient,
        deep_components,
    }
}

/// Transient vertex set of the canonical geodesic from `x` to `y`.
pub fn transient_geodesic(g: &MetricGraph, index: &FamilyIndex, x: Vertex, y: Vertex, params: &TransientParams) -> VertexSet {
    decompose_indexed(g, index, &geodesic(g, x, y), params).transient_vertices()
}

/// Three corners and the canonical geodesic sides `c0->c1`, `c1->c2`, `c2->c0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleSample {
    pub corners: [Vertex; 3],
    pub sides: [PathInSpace; 3],
}

impl TriangleSample {
    pub fn new(g: &MetricGraph, a: Vertex, b: Vertex, c: Vertex) -> Self {
        TriangleSample {
            corners: [a, b, c],
            sides: [geodesic(g, a, b), geodesic(g, b, c), geodesic(g, c, a)],
        }
    }
}

/// Exhaustive when the pool has at most 40 vertices, otherwise `count`
/// seeded samples.
pub fn default_triangle_mode(pool_len: usize, count: usize, seed: u64) -> Mode {
    if pool_len <= 40 {
        Mode::Exhaustive
    } else {
        Mode::Sampled { count, seed }
    }
}

/// Corner triples drawn from `pool`: all `x < y < z` when exhaustive, else
/// seeded distinct triples.
pub fn triangle_corners(pool: &VertexSet, mode: Mode, label: &str) -> Vec<[Vertex; 3]> {
    let p = pool.as_slice();
    match mode {
        Mode::Exhaustive => {
            let mut out = Vec::new();
            for a in 0..p.len() {
                for b in a + 1..p.len() {
                    for c in b + 1..p.len() {
                        out.push([p[a], p[b], p[c]]);
                    }
                }
            }
            out
        }
        Mode::Sampled { count, seed } => {
            if p.len() < 3 {
                return Vec::new();
            }
            let mut rng = rng_for(seed, label);
            (0..count)
                .map(|_| loop {
                    let t = [p[rng.gen_range(0..p.len())], p[rng.gen_range(0..p.len())], p[rng.gen_range(0..p.len())]];
                    if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
                        break t;
                    }
                })
                .collect()
        }
    }
}

/// Unordered pairs from `pool`: all when exhaustive, else seeded samples.
pub fn pool_pairs(pool: &VertexSet, mode: Mode, label: &str) -> Vec<(Vertex, Vertex)> {
    let p = pool.as_slice();
    match mode {
        Mode::Exhaustive => (0..p.len())
            .flat_map(|a| (a + 1..p.len()).map(move |b| (p[a], p[b])))
            .collect(),
        Mode::Sampled { count, seed } => {
            if p.len() < 2 {
                return Vec::new();
            }
            let mut rng = rng_for(seed, label);
            (0..count)
                .map(|_| loop {
                    let (x, y) = (p[rng.gen_range(0..p.len())], p[rng.gen_range(0..p.len())]);
                    if x != y {
                        break (x.min(y), x.max(y));
                    }
                })
                .collect()
        }
    }
}

/// Relative Rips condition: `D = sup` over triangles and side rotations of
/// the distance from the transient set of one side to the union of the
/// transient sets of the other two (with `c = r`). Each side ranges over the
/// geodesics of [`side_geodesics`].
pub fn check_relative_rips(
    g: &MetricGraph,
    fam: &PeripheralFamily,
    mu: f64,
    r: f64,
    pool: &VertexSet,
    mode: Mode,
) -> ConstantsReport {
    let mut report = ConstantsReport::new("rh3-rips", mode.tag());
    let params = TransientParams::new(mu, r);
    let index = FamilyIndex::new(g, fam, mu);
    let corners = triangle_corners(pool, mode, "relative-rips");
    let mut sides: Vec<(Vertex, Vertex)> = corners
        .iter()
        .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
        .map(|(u, v)| (u.min(v), u.max(v)))
        .collect();
    sides.sort_unstable();
    sides.dedup();
    let trans: HashMap<(Vertex, Vertex), Vec<Vec<Vertex>>> = sides
        .par_iter()
        .map(|&(u, v)| {
            let variants = side_geodesics(g, u, v)
                .iter()
                .map(|p| decompose_indexed(g, &index, p, &params).transient_vertices().into_vec())
                .collect();
            ((u, v), variants)
        })
        .collect();
    let metric = LocalMetric::new(g, trans.values().flatten().flatten().copied());
    let side = |u: Vertex, v: Vertex| &trans[&(u.min(v), u.max(v))];
    // For a point p of one side, the worst choice of the other two sides
    // maximizes d(p, side) for each of them independently.
    let worst = |p: Vertex, variants: &[Vec<Vertex>]| {
        variants.iter().map(|s| metric.to_set(p, s)).fold(0.0, f64::max)
    };
    let results: Vec<Best> = corners
        .par_iter()
        .map(|&[a, b, c]| {
            let mut best = Best::default();
            for (x, y, z) in [(a, b, c), (b, c, a), (c, a, b)] {
                for s0 in side(x, y) {
                    for &p in s0 {
                        let d = worst(p, side(y, z)).min(worst(p, side(z, x)));
                        best.offer(d, || {
                            (
                                vec![x, y, z, p],
                                Vec::new(),
                                "side x-y, transient point far from sides y-z, z-x".into(),
                            )
                        });
                    }
                }
            }
            best
        })
        .collect();
    report.set("D", &Best::fold(results));
    report.set_samples("triangles", corners.len());
    report.constants.insert("mu".into(), Real(mu));
    report.constants.insert("R".into(), Real(r));
    for (name, v) in [("mu", mu), ("R", r)] {
        report.witnesses.push(Witness {
            constant: name.into(),
            value: Real(v),
            note: "fixed per run".into(),
            ..Default::default()
        });
    }
    report
}

/// Peripheral clause of the transient characterization: for pairs `x, y`
/// within `k` of a common member `P`, the smallest `K` such that whenever
/// `d(x,y) >= K` the transient set of `[x,y]` lies in `B_K(x) ∪ B_K(y)` and
/// meets `N_mu(P)`.
pub fn check_rh3_cond2(
    g: &MetricGraph,
    fam: &PeripheralFamily,
    mu: f64,
    r: f64,
    k: f64,
    pool: &VertexSet,
    mode: Mode,
) -> ConstantsReport {
    let mut report = ConstantsReport::new("rh3-cond2", mode.tag());
    let params = TransientParams::new(mu, r);
    let index = FamilyIndex::new(g, fam, mu.max(k));
    let pairs = admissible_pairs(&index, fam, pool, k, mode, "rh3-cond2");
    report.set_samples("pairs", pairs.len());
    if pairs.is_empty() {
        report.note("no-admissible-pairs");
        return report;
    }
    let step = g.min_edge_length();
    let results: Vec<(Best, bool)> = pairs
        .par_iter()
        .map(|&(m, x, y)| {
            let dec = decompose_indexed(g, &index, &geodesic(g, x, y), &params);
            let (rx, ry) = (g.distances_from(x), g.distances_from(y));
            let trans = dec.transient_vertices();
            let (mut clause1, mut at) = (0.0, x);
            for t in trans.iter() {
                let d = rx[t].min(ry[t]);
                if d > clause1 + EPS {
                    clause1 = d;
                    at = t;
                }
            }
            let meets = trans.iter().any(|t| index.distance(t, m).is_some_and(|d| d <= mu + EPS));
            let need = if meets { clause1 } else { f64::INFINITY };
            let req = requirement(need, rx[y], step);
            let note = if meets {
                "transient point far from both endpoints"
            } else {
                "no transient point near the member"
            };
            (Best::new(req, vec![x, y, at], vec![m], note), meets)
        })
        .collect();
    let misses = results.iter().filter(|(_, meets)| !meets).count();
    report.set("K", &Best::fold(results.into_iter().map(|(b, _)| b)));
    report.set_samples("clause2_misses", misses);
    report
}

/// `(member, x, y)` with `x < y` in `pool`, both within `k` of the member.
fn admissible_pairs(
    index: &FamilyIndex,
    fam: &PeripheralFamily,
    pool: &VertexSet,
    k: f64,
    mode: Mode,
    label: &str,
) -> Vec<(usize, Vertex, Vertex)> {
    let mut by_member: Vec<Vec<Vertex>> = vec![Vec::new(); fam.len()];
    for v in pool.iter() {
        for m in index.within(v, k) {
            by_member[m].push(v);
        }
    }
    match mode {
        Mode::Exhaustive => by_member
            .iter()
            .enumerate()
            .flat_map(|(m, list)| {
                (0..list.len()).flat_map(move |a| (a + 1..list.len()).map(move |b| (m, list[a], list[b])))
            })
            .collect(),
        Mode::Sampled { count, seed } => {
            let usable: Vec<usize> = (0..fam.len()).filter(|&m| by_member[m].len() >= 2).collect();
            if usable.is_empty() {
                return Vec::new();
            }
            let mut rng = rng_for(seed, label);
            (0..count)
                .map(|_| {
                    let m = usable[rng.gen_range(0..usable.len())];
                    let list = &by_member[m];
                    loop {
                        let (x, y) = (list[rng.gen_range(0..list.len())], list[rng.gen_range(0..list.len())]);
                        if x != y {
                            break (m, x.min(y), x.max(y));
                        }
                    }
                })
                .collect()
        }
    }
}

/// Outcome of the triangle classification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum AtgCase {
    /// A vertex within `radius <= sigma` of all three sides.
    Center { center: Vertex, radius: f64 },
    /// `N_sigma(P)` meets all sides and consecutive exit/entrance points are
    /// within `delta`; `gaps[i] = d(exits[i], entries[i+1])`.
    Peripheral {
        member: usize,
        entries: [Vertex; 3],
        exits: [Vertex; 3],
        gaps: [f64; 3],
    },
    Neither,
}

pub fn classify_triangle_atg(
    g: &MetricGraph,
    fam: &PeripheralFamily,
    tri: &TriangleSample,
    sigma: f64,
    delta: f64,
) -> AtgCase {
    let index = FamilyIndex::new(g, fam, sigma);
    classify_triangle_atg_indexed(g, &index, tri, sigma, delta)
}

pub fn classify_triangle_atg_indexed(
    g: &MetricGraph,
    index: &FamilyIndex,
    tri: &TriangleSample,
    sigma: f64,
    delta: f64,
) -> AtgCase {
    if let Some((center, radius)) = best_center(g, tri, sigma) {
        return AtgCase::Center { center, radius };
    }
    let mut spans: Vec<BTreeMap<usize, (Vertex, Vertex)>> = Vec::new();
    for side in &tri.sides {
        let mut span: BTreeMap<usize, (Vertex, Vertex)> = BTreeMap::new();
        for &v in &side.vertices {
            for m in index.within(v, sigma) {
                span.entry(m).and_modify(|e| e.1 = v).or_insert((v, v));
            }
        }
        spans.push(span);
    }
    for (&m, &s0) in &spans[0] {
        let (Some(&s1), Some(&s2)) = (spans[1].get(&m), spans[2].get(&m)) else {
            continue;
        };
        let entries = [s0.0, s1.0, s2.0];
        let exits = [s0.1, s1.1, s2.1];
        let gaps = [0, 1, 2].map(|i| g.distance(exits[i], entries[(i + 1) % 3]));
        if gaps.iter().all(|&d| d <= delta + EPS) {
            return AtgCase::Peripheral {
                member: m,
                entries,
                exits,
                gaps,
            };
        }
    }
    AtgCase::Neither
}

/// Vertex minimizing the largest distance to the three sides, if that
/// distance is at most `sigma`; ties go to the least id.
fn best_center(g: &MetricGraph, tri: &TriangleSample, sigma: f64) -> Option<(Vertex, f64)> {
    let balls: Vec<HashMap<Vertex, f64>> = tri
        .sides
        .iter()
        .map(|s| multi_source(g, &s.vertex_set().into_vec(), sigma).into_iter().collect())
        .collect();
    let mut best: Option<(Vertex, f64)> = None;
    for (&v, &d0) in &balls[0] {
        let (Some(&d1), Some(&d2)) = (balls[1].get(&v), balls[2].get(&v)) else {
            continue;
        };
        let r = d0.max(d1).max(d2);
        let better = match best {
            None => true,
            Some((bv, br)) => r < br - EPS || ((r - br).abs() <= EPS && v < bv),
        };
        if better {
            best = Some((v, r));
        }
    }
    best
}

/// Weak triangle classification audit: counts triangles in each case and
/// records the first unclassified one.
pub fn check_rh0(
    g: &MetricGraph,
    fam: &PeripheralFamily,
    sigma: f64,
    delta: f64,
    pool: &VertexSet,
    mode: Mode,
) -> ConstantsReport {
    let mut report = ConstantsReport::new("rh0", mode.tag());
    let index = FamilyIndex::new(g, fam, sigma);
    let corners = triangle_corners(pool, mode, "rh0");
    let cases: Vec<AtgCase> = corners
        .par_iter()
        .map(|&[a, b, c]| classify_triangle_atg_indexed(g, &index, &TriangleSample::new(g, a, b, c), sigma, delta))
        .collect();
    let mut center = Best::default();
    let mut gap = Best::default();
    let mut neither = 0;
    for (t, case) in corners.iter().zip(&cases) {
        match case {
            AtgCase::Center { center: v, radius } => {
                center.offer(*radius, || (vec![t[0], t[1], t[2], *v], Vec::new(), "center radius".into()))
            }
            AtgCase::Peripheral { member, gaps, .. } => {
                let worst = gaps.iter().copied().fold(0.0, f64::max);
                gap.offer(worst, || (t.to_vec(), vec![*member], "largest exit-entrance gap".into()))
            }
            AtgCase::Neither => {
                neither += 1;
                if neither == 1 {
                    report.flag(Witness {
                        constant: "neither".into(),
                        value: Real(1.0),
                        vertices: t.to_vec(),
                        note: format!("no center within {sigma} and no member with gaps within {delta}"),
                        ..Default::default()
                    });
                }
            }
        }
    }
    report.set("sigma_center", &center);
    report.set("delta_gap", &gap);
    report.set_samples("triangles", corners.len());
    report.set_samples("neither", neither);
    report
}

/// Transient-set stability over pairs of paths with shared endpoints:
/// `M` is the largest Hausdorff distance between the two transient sets,
/// `depth` the largest distance from a deep vertex to its member, and
/// entrance points of members whose neighborhood meets the path in diameter
/// at least `2c` must be transient.
pub fn check_transient_stability(
    g: &MetricGraph,
    fam: &PeripheralFamily,
    params: &TransientParams,
    pairs: &[(PathInSpace, PathInSpace)],
) -> Result<ConstantsReport, GraphError> {
    for (a, b) in pairs {
        if a.start() != b.start() || a.end() != b.end() {
            return Err(GraphError::EndpointMismatch(a.start(), a.end(), b.start(), b.end()));
        }
    }
    let mut report = ConstantsReport::new("stability", Mode::Exhaustive.tag());
    let index = FamilyIndex::new(g, fam, params.mu);
    let decs: Vec<(TransientDecomposition, TransientDecomposition)> = pairs
        .par_iter()
        .map(|(a, b)| (decompose_indexed(g, &index, a, params), decompose_indexed(g, &index, b, params)))
        .collect();
    let metric = LocalMetric::new(
        g,
        decs.iter().flat_map(|(a, b)| a.path.vertices.iter().chain(&b.path.vertices)).copied(),
    );
    let mut m = Best::default();
    let mut depth = Best::default();
    let mut failures = 0;
    for (da, db) in &decs {
        let (ta, tb) = (da.transient_vertices(), db.transient_vertices());
        let h = metric.hausdorff(ta.as_slice(), tb.as_slice());
        m.offer(h, || (vec![da.path.start(), da.path.end()], Vec::new(), "transient sets of a path pair".into()));
        for dec in [da, db] {
            for c in &dec.deep_components {
                let mask = fam.members[c.member].mask(g.vertex_count());
                for &v in &dec.path.vertices[c.start..=c.end] {
                    let d = index.distance(v, c.member).unwrap_or_else(|| g.distance_to_mask(v, &mask));
                    depth.offer(d, || (vec![v], vec![c.member], "deep vertex distance to its member".into()));
                }
            }
            for (member, entrance) in entrances(&metric, &index, dec, params) {
                if !dec.is_transient(entrance) {
                    failures += 1;
                    if failures == 1 {
                        report.flag(Witness {
                            constant: "entrance".into(),
                            value: Real(1.0),
                            vertices: vec![dec.path.vertices[entrance]],
                            members: vec![member],
                            note: "entrance point is deep".into(),
                        });
                    }
                }
            }
        }
    }
    report.set("M", &m);
    report.set("depth", &depth);
    if params.mu > 0.0 {
        let t = Best {
            value: depth.value / params.mu,
            ..depth.clone()
        };
        report.set("t", &t);
    }
    report.set_samples("pairs", pairs.len());
    report.set_samples("entrance_failures", failures);
    Ok(report)
}

/// First path index in `N_mu(P)` for members whose neighborhood meets the
/// path in a set of diameter at least `2c`.
fn entrances(
    metric: &LocalMetric,
    index: &FamilyIndex,
    dec: &TransientDecomposition,
    params: &TransientParams,
) -> Vec<(usize, usize)> {
    let mut hits: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &v) in dec.path.vertices.iter().enumerate() {
        for m in index.within(v, params.mu) {
            hits.entry(m).or_default().push(i);
        }
    }
    hits.into_iter()
        .filter_map(|(m, idx)| {
            let vs: Vec<Vertex> = idx.iter().map(|&i| dec.path.vertices[i]).collect();
            (metric.diameter(&vs).0 + EPS >= 2.0 * params.c).then_some((m, idx[0]))
        })
        .collect()
}

/// Pairs (canonical geodesic, perturbed near-geodesic) for sampled pool pairs.
pub fn sample_path_pairs(
    g: &MetricGraph,
    pool: &VertexSet,
    count: usize,
    slack: f64,
    seed: u64,
) -> Vec<(PathInSpace, PathInSpace)> {
    pool_pairs(pool, Mode::Sampled { count, seed }, "path-pairs")
        .par_iter()
        .map(|&(x, y)| {
            let mut fam = geodesic_family(g, x, y, 1, slack, seed);
            let canonical = fam.remove(0);
            let mut other = fam.pop().unwrap_or_else(|| canonical.clone());
            if !other.geodesic {
                other.quasi = Some(crate::graph::QuasiConstants {
                    lambda: 1.0,
                    epsilon: slack,
                });
            }
            (canonical, other)
        })
        .collect()
}

/// A path and a marked subset for each pair of pool vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct GGEntry {
    pub eta: PathInSpace,
    /// Sorted indices into `eta`.
    pub trans: Vec<usize>,
}

impl GGEntry {
    pub fn trans_vertices(&self) -> Vec<Vertex> {
        self.trans.iter().map(|&i| self.eta.vertices[i]).collect::<VertexSet>().into_vec()
    }

    fn reversed(&self) -> GGEntry {
        let n = self.eta.len();
        let mut trans: Vec<usize> = self.trans.iter().map(|&i| n - 1 - i).collect();
        trans.sort_unstable();
        GGEntry {
            eta: self.eta.reversed(),
            trans,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GGFamily {
    pub pool: Vec<Vertex>,
    /// Keyed by `(x, y)` with `x < y`; `eta` runs from `x` to `y`.
    pub entries: BTreeMap<(Vertex, Vertex), GGEntry>,
    /// Candidate constant recorded with the family.
    pub d: f64,
}

impl GGFamily {
    /// Canonical geodesics with their transient sets.
    pub fn transient(g: &MetricGraph, fam: &PeripheralFamily, pool: &VertexSet, params: &TransientParams) -> Self {
        let index = FamilyIndex::new(g, fam, params.mu);
        let pairs = pool_pairs(pool, Mode::Exhaustive, "gg");
        let entries = pairs
            .par_iter()
            .map(|&(x, y)| {
                let dec = decompose_indexed(g, &index, &geodesic(g, x, y), params);
                ((x, y), GGEntry { eta: dec.path, trans: dec.transient })
            })
            .collect();
        GGFamily {
            pool: pool.as_slice().to_vec(),
            entries,
            d: 0.0,
        }
    }

    /// Replaces `eta(x,y)` by the detour `[x,hub] [hub,y]`, fully marked,
    /// whenever the detour is at most twice as long as `d(x,y)`.
    pub fn hub_corrupted(&self, g: &MetricGraph, hub: Vertex) -> Self {
        let row = g.distances_from(hub);
        let entries = self
            .entries
            .par_iter()
            .map(|(&(x, y), e)| {
                let dxy = e.eta.length();
                let detour = row[x] + row[y];
                if hub == x || hub == y || detour > 2.0 * g.distance(x, y) + EPS || detour <= dxy + EPS {
                    return ((x, y), e.clone());
                }
                let eta = geodesic(g, x, hub).concat(&geodesic(g, hub, y)).expect("paths meet at the hub");
                let trans = (0..eta.len()).collect();
                ((x, y), GGEntry { eta, trans })
            })
            .collect();
        GGFamily {
            pool: self.pool.clone(),
            entries,
            d: self.d,
        }
    }

    /// Entry oriented from `x` to `y`.
    pub fn get(&self, x: Vertex, y: Vertex) -> Result<GGEntry, GraphError> {
        if x == y {
            return Ok(GGEntry {
                eta: PathInSpace::trivial(x),
                trans: vec![0],
            });
        }
        let e = self
            .entries
            .get(&(x.min(y), x.max(y)))
            .ok_or(GraphError::MissingPair(x, y))?;
        Ok(if x < y { e.clone() } else { e.reversed() })
    }

    fn trans_set(&self, x: Vertex, y: Vertex) -> Result<Vec<Vertex>, GraphError> {
        if x == y {
            return Ok(vec![x]);
        }
        self.entries
            .get(&(x.min(y), x.max(y)))
            .map(GGEntry::trans_vertices)
            .ok_or(GraphError::MissingPair(x, y))
    }

    /// Text form: `D <d>`, then per pair `PAIR x y`, `ETA v...`, `TRANS i...`.
    pub fn to_text(&self) -> String {
        let mut out = format!("D {}\nPOOL", Real(self.d));
        for v in &self.pool {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
        for (&(x, y), e) in &self.entries {
            writeln!(out, "PAIR {x} {y}").unwrap();
            out.push_str("ETA");
            for v in &e.eta.vertices {
                write!(out, " {v}").unwrap();
            }
            out.push_str("\nTRANS");
            for i in &e.trans {
                write!(out, " {i}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(g: &MetricGraph, text: &str) -> Result<GGFamily, GraphError> {
        let mut fam = GGFamily {
            pool: Vec::new(),
            entries: BTreeMap::new(),
            d: 0.0,
        };
        let mut pair: Option<(Vertex, Vertex)> = None;
        let mut eta: Option<PathInSpace> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap();
            let nums: Vec<&str> = it.collect();
            let ints = || -> Result<Vec<usize>, GraphError> {
                nums.iter()
                    .map(|t| t.parse().map_err(|_| GraphError::parse(i + 1, format!("bad integer `{t}`"))))
                    .collect()
            };
            match tag {
                "D" => {
                    fam.d = nums
                        .first()
                        .and_then(|t| if *t == "inf" { Some(f64::INFINITY) } else { t.parse().ok() })
                        .ok_or_else(|| GraphError::parse(i + 1, "bad constant"))?
                }
                "POOL" => fam.pool = ints()?,
                "PAIR" => {
                    let v = ints()?;
                    if v.len() != 2 {
                        return Err(GraphError::parse(i + 1, "PAIR needs two vertices"));
                    }
                    pair = Some((v[0], v[1]));
                }
                "ETA" => {
                    let (x, y) = pair.ok_or_else(|| GraphError::parse(i + 1, "ETA before PAIR"))?;
                    let mut p = PathInSpace::from_vertices(g, ints()?).map_err(|e| GraphError::parse(i + 1, e.to_string()))?;
                    p.geodesic = (p.length() - g.distance(x, y)).abs() <= EPS;
                    if p.start() != x || p.end() != y {
                        return Err(GraphError::parse(i + 1, "ETA does not join the PAIR"));
                    }
                    eta = Some(p);
                }
                "TRANS" => {
                    let (x, y) = pair.take().ok_or_else(|| GraphError::parse(i + 1, "TRANS before PAIR"))?;
                    let p = eta.take().ok_or_else(|| GraphError::parse(i + 1, "TRANS before ETA"))?;
                    let mut trans = ints()?;
                    trans.sort_unstable();
                    trans.dedup();
                    if trans.last().is_some_and(|&t| t >= p.len()) {
                        return Err(GraphError::parse(i + 1, "TRANS index outside ETA"));
                    }
                    let e = GGEntry { eta: p, trans };
                    let e = if x < y { e } else { e.reversed() };
                    fam.entries.insert((x.min(y), x.max(y)), e);
                }
                _ => return Err(GraphError::parse(i + 1, format!("unknown record `{tag}`"))),
            }
        }
        if pair.is_some() {
            return Err(GraphError::parse(text.lines().count(), "PAIR without TRANS"));
        }
        Ok(fam)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GGParams {
    /// Verdict is `plausible` when every constant is at most this.
    pub cap: f64,
    /// Neighborhood radius for the bounded intersection condition.
    pub alpha1_k: f64,
    /// Radii `k` for the peripheral clause.
    pub k_grid: Vec<f64>,
}

impl Default for GGParams {
    fn default() -> Self {
        GGParams {
            cap: 10.0,
            alpha1_k: 1.0,
            k_grid: vec![1.0, 2.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GGAudit {
    pub reports: Vec<ConstantsReport>,
    pub cap: Real,
    pub plausible: bool,
    /// Conditions whose constant exceeds the cap.
    pub failing: Vec<String>,
}

/// Measures the smallest constant for each guessing-geodesics condition over
/// all pool pairs and triples.
pub fn gg_condition_audit(
    g: &MetricGraph,
    fam: &PeripheralFamily,
    family: &GGFamily,
    params: &GGParams,
) -> Result<GGAudit, GraphError> {
    let pool = &family.pool;
    if pool.len() < 3 {
        return Err(GraphError::EmptySet);
    }
    for (a, &x) in pool.iter().enumerate() {
        for &y in &pool[a + 1..] {
            family.get(x, y)?;
        }
    }
    let entries: Vec<((Vertex, Vertex), &GGEntry)> = family.entries.iter().map(|(&k, e)| (k, e)).collect();
    let metric = LocalMetric::new(
        g,
        entries
            .iter()
            .flat_map(|(_, e)| e.eta.vertices.iter().copied())
            .chain(pool.iter().copied()),
    );
    let step = g.min_edge_length();
    let mode = Mode::Exhaustive.tag();
    let mut reports = Vec::new();

    // (1) short pairs have bounded transient sets.
    let mut r1 = ConstantsReport::new("gg1", mode.clone());
    let mut short = 0;
    let mut b1 = Best::default();
    for ((x, y), e) in &entries {
        if metric.d(*x, *y) <= 2.0 * step + EPS {
            short += 1;
            let (d, w) = metric.diameter(&e.trans_vertices());
            b1.offer(d, || (w.map_or(vec![*x, *y], |(u, v)| vec![*x, *y, u, v]), Vec::new(), "diam of trans for a short pair".into()));
        }
    }
    r1.set("D", &b1);
    r1.set_samples("pairs", short);
    reports.push(r1);

    // (2) restriction to a subpath matches the subpath's own transient set.
    let pool_set: VertexSet = pool.iter().copied().collect();
    let b2: Vec<(Best, usize)> = entries
        .par_iter()
        .map(|((x, y), e)| {
            let mut best = Best::default();
            let mut count = 0;
            let on_pool: Vec<(usize, Vertex)> = e
                .eta
                .vertices
                .iter()
                .enumerate()
                .filter(|&(_, &v)| pool_set.contains(v))
                .map(|(i, &v)| (i, v))
                .collect();
            for (a, &(i, u)) in on_pool.iter().enumerate() {
                for &(j, v) in &on_pool[a + 1..] {
                    if u == v {
                        continue;
                    }
                    count += 1;
                    let mut restricted: Vec<Vertex> =
                        e.trans.iter().filter(|&&t| t >= i && t <= j).map(|&t| e.eta.vertices[t]).collect();
                    restricted.extend([u, v]);
                    let own = family.trans_set(u, v).expect("pool pair present");
                    let h = metric.hausdorff(&own, &restricted);
                    best.offer(h, || (vec![*x, *y, u, v], Vec::new(), "trans(x',y') vs restriction".into()));
                }
            }
            (best, count)
        })
        .collect();
    let mut r2 = ConstantsReport::new("gg2", mode.clone());
    r2.set_samples("subpairs", b2.iter().map(|(_, c)| c).sum());
    r2.set("D", &Best::fold(b2.into_iter().map(|(b, _)| b)));
    reports.push(r2);

    // (3) thin triangles of transient sets.
    let corners = triangle_corners(&pool_set, Mode::Exhaustive, "gg3");
    let trans_of: HashMap<(Vertex, Vertex), Vec<Vertex>> =
        entries.iter().map(|(k, e)| (*k, e.trans_vertices())).collect();
    let t = |u: Vertex, v: Vertex| &trans_of[&(u.min(v), u.max(v))];
    let b3: Vec<Best> = corners
        .par_iter()
        .map(|&[a, b, c]| {
            let mut best = Best::default();
            for (x, y, z) in [(a, b, c), (b, c, a), (c, a, b)] {
                let others: Vec<Vertex> = t(x, z).iter().chain(t(z, y)).copied().collect();
                let (d, p) = metric.directed(t(x, y), &others);
                best.offer(d, || (vec![x, y, z, p.unwrap_or(x)], Vec::new(), "trans(x,y) far from trans(x,z) ∪ trans(z,y)".into()));
            }
            best
        })
        .collect();
    let mut r3 = ConstantsReport::new("gg3", mode.clone());
    r3.set("D", &Best::fold(b3));
    r3.set_samples("triangles", corners.len());
    reports.push(r3);

    // (4) a marked point between any two path points not on a common member.
    let on_member = FamilyIndex::new(g, fam, 0.0);
    let b4: Vec<Best> = entries
        .par_iter()
        .map(|((x, y), e)| {
            let mut best = Best::default();
            let cum = &e.eta.cumulative_length;
            let n = e.eta.len();
            for i in 0..n {
                for j in i..n {
                    let (u, v) = (e.eta.vertices[i], e.eta.vertices[j]);
                    let shared = on_member.within(u, 0.0).any(|m| on_member.distance(v, m).is_some());
                    if shared {
                        continue;
                    }
                    let need = e
                        .trans
                        .iter()
                        .map(|&t| {
                            if t >= i && t <= j {
                                0.0
                            } else if t < i {
                                cum[i] - cum[t]
                            } else {
                                cum[t] - cum[j]
                            }
                        })
                        .fold(f64::INFINITY, f64::min);
                    best.offer(need, || (vec![*x, *y, u, v], Vec::new(), "arclength to the nearest marked point".into()));
                }
            }
            best
        })
        .collect();
    let mut r4 = ConstantsReport::new("gg4", mode.clone());
    r4.set("D", &Best::fold(b4));
    r4.set_samples("pairs", entries.len());
    reports.push(r4);

    // (5) bounded coarse intersection of the family.
    let mut r5 = check_alpha1_with_diameter(g, fam, params.alpha1_k, f64::INFINITY, diameter_estimate(g));
    r5.check = "gg5".into();
    reports.push(r5);

    // (6) peripheral clause per k.
    let kmax = params.k_grid.iter().copied().fold(0.0, f64::max);
    let near = FamilyIndex::new(g, fam, kmax);
    let mut r6 = ConstantsReport::new("gg6", mode);
    for &k in &params.k_grid {
        let pairs = admissible_pairs(&near, fam, &pool_set, k, Mode::Exhaustive, "gg6");
        let results: Vec<Best> = pairs
            .par_iter()
            .map(|&(m, x, y)| {
                let e = family.get(x, y).expect("pool pair present");
                let tv = e.trans_vertices();
                let mut clause1 = 0.0;
                let mut at = x;
                for &p in &tv {
                    let d = metric.d(p, x).min(metric.d(p, y));
                    if d > clause1 + EPS {
                        clause1 = d;
                        at = p;
                    }
                }
                let mask = fam.members[m].mask(g.vertex_count());
                let clause2 = tv
                    .iter()
                    .map(|&p| near.distance(p, m).unwrap_or_else(|| g.distance_to_mask(p, &mask)))
                    .fold(f64::INFINITY, f64::min);
                let req = requirement(clause1.max(clause2), metric.d(x, y), step);
                Best::new(req, vec![x, y, at], vec![m], "trans far from endpoints or from the member")
            })
            .collect();
        let name = format!("K(k={k})");
        r6.set(&name, &Best::fold(results));
        r6.set_samples(&name, pairs.len());
    }
    reports.push(r6);

    let mut failing = Vec::new();
    for r in &mut reports {
        let names: Vec<String> = r
            .constants
            .keys()
            .filter(|n| *n != "diameter")
            .cloned()
            .collect();
        for name in names {
            let v = r.constants[&name].0;
            if v > params.cap + EPS {
                if let Some(w) = r.witnesses.iter().find(|w| w.constant == name).cloned() {
                    r.flag(w);
                }
                failing.push(format!("{}:{}", r.check, name));
            }
        }
    }
    Ok(GGAudit {
        reports,
        cap: Real(params.cap),
        plausible: failing.is_empty(),
        failing,
    })
}

/// Largest Hausdorff distance between the family's marked set for the
/// endpoints of each `beta` and the transient set of `beta`.
pub fn gg_compare(
    g: &MetricGraph,
    fam: &PeripheralFamily,
    family: &GGFamily,
    params: &TransientParams,
    betas: &[PathInSpace],
) -> Result<ConstantsReport, GraphError> {
    let index = FamilyIndex::new(g, fam, params.mu);
    let mut sets = Vec::with_capacity(betas.len());
    for b in betas {
        let own = family.trans_set(b.start(), b.end())?;
        let dec = decompose_indexed(g, &index, b, params).transient_vertices().into_vec();
        sets.push((b.start(), b.end(), own, dec));
    }
    let metric = LocalMetric::new(g, sets.iter().flat_map(|(_, _, a, b)| a.iter().chain(b)).copied());
    let mut best = Best::default();
    for (x, y, own, dec) in &sets {
        let h = metric.hausdorff(own, dec);
        best.offer(h, || (vec![*x, *y], Vec::new(), "family marks vs transient set of beta".into()));
    }
    let mut report = ConstantsReport::new("gg-compare", Mode::Exhaustive.tag());
    report.set("L+c", &best);
    report.set_samples("betas", betas.len());
    Ok(report)
}
