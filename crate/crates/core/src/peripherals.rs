//! Peripheral families, the bounded-coset-intersection and geodesic-entry
//! axioms, closest-point projections and the projection lemma estimators.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::graph::{MetricGraph, PathInSpace, Vertex, VertexSet, EPS};
use crate::metric::{neighborhood, set_diameter};
use crate::report::{Best, ConstantsReport, Witness, Real};
use crate::sampling::{rng_for, Mode};
use crate::shortest::{geodesic_family, multi_source, nearest_source_labels};

/// Indexed candidate peripheral sets.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PeripheralFamily {
    pub members: Vec<VertexSet>,
    /// Coarse connectivity constant each member satisfies.
    pub coarse_connectivity: f64,
}

impl PeripheralFamily {
    pub fn new(members: Vec<VertexSet>, coarse_connectivity: f64) -> Self {
        PeripheralFamily {
            members,
            coarse_connectivity,
        }
    }

    pub fn empty() -> Self {
        PeripheralFamily::new(Vec::new(), 1.0)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Family restricted to the given member indices, in order.
    pub fn select(&self, indices: &[usize]) -> PeripheralFamily {
        PeripheralFamily::new(
            indices.iter().map(|&i| self.members[i].clone()).collect(),
            self.coarse_connectivity,
        )
    }

    /// Text form: one `P <index> <v1> <v2> ...` line per member.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, m) in self.members.iter().enumerate() {
            write!(out, "P {i}").unwrap();
            for v in m.iter() {
                write!(out, " {v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text form, checking ids against `vertex_count`. Indices
    /// must be `0, 1, 2, ...` in order.
    pub fn from_text(text: &str, vertex_count: usize) -> Result<PeripheralFamily, GraphError> {
        let mut members = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            if it.next() != Some("P") {
                return Err(GraphError::parse(i + 1, "expected `P <index> <v...>`"));
            }
            let idx: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| GraphError::parse(i + 1, "missing member index"))?;
            if idx != members.len() {
                return Err(GraphError::parse(i + 1, format!("member index {idx} out of order")));
            }
            let mut vs = Vec::new();
            for t in it {
                let v: Vertex = t
                    .parse()
                    .map_err(|_| GraphError::parse(i + 1, format!("bad vertex `{t}`")))?;
                if v >= vertex_count {
                    return Err(GraphError::parse(i + 1, format!("vertex {v} out of range")));
                }
                vs.push(v);
            }
            if vs.is_empty() {
                return Err(GraphError::parse(i + 1, "empty member"));
            }
            members.push(VertexSet::new(vs));
        }
        Ok(PeripheralFamily::new(members, 1.0))
    }
}

/// Least-id vertex of `p` nearest to `x`.
pub fn project(g: &MetricGraph, x: Vertex, p: &VertexSet) -> Result<Vertex, GraphError> {
    if p.is_empty() {
        return Err(GraphError::EmptySet);
    }
    g.check_vertex(x)?;
    if p.contains(x) {
        return Ok(x);
    }
    let mut best = (f64::INFINITY, usize::MAX);
    for (v, d) in multi_source(g, &[x], f64::INFINITY) {
        if d > best.0 + EPS {
            break;
        }
        if p.contains(v) && (d < best.0 - EPS || v < best.1) {
            best = (d.min(best.0), v);
        }
    }
    Ok(best.1)
}

/// Per-member distance row and least-id projection for every vertex.
pub struct MemberField {
    pub dist: Vec<f64>,
    pub proj: Vec<Vertex>,
    pub mask: Vec<bool>,
}

impl MemberField {
    pub fn new(g: &MetricGraph, member: &VertexSet) -> Self {
        let (dist, proj) = nearest_source_labels(g, member.as_slice());
        MemberField {
            dist,
            proj,
            mask: member.mask(g.vertex_count()),
        }
    }
}

/// Estimate of the graph diameter: exact up to 3000 vertices, otherwise a
/// double sweep lower bound.
pub fn diameter_estimate(g: &MetricGraph) -> f64 {
    if g.vertex_count() <= 3000 {
        return (0..g.vertex_count())
            .into_par_iter()
            .map(|v| crate::shortest::single_source(g, v, None).into_iter().fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max);
    }
    let row = crate::shortest::single_source(g, 0, None);
    let far = (0..row.len()).fold(0, |b, v| if row[v] > row[b] { v } else { b });
    crate::shortest::single_source(g, far, None).into_iter().fold(0.0, f64::max)
}

/// Bounded coarse intersection: `B = max diam(N_K(P) ∩ N_K(Q))` over distinct
/// members, flagged when `B > fraction * diameter`.
pub fn check_alpha1(g: &MetricGraph, fam: &PeripheralFamily, k: f64, fraction: f64) -> ConstantsReport {
    let diameter = diameter_estimate(g);
    check_alpha1_with_diameter(g, fam, k, fraction, diameter)
}

pub fn check_alpha1_with_diameter(
    g: &MetricGraph,
    fam: &PeripheralFamily,
    k: f64,
    fraction: f64,
    diameter: f64,
) -> ConstantsReport {
    let mut report = ConstantsReport::new("alpha1", Mode::Exhaustive.tag());
    let hoods: Vec<VertexSet> = fam.members.par_iter().map(|m| neighborhood(g, m, k)).collect();
    let mut touching: HashMap<Vertex, Vec<usize>> = HashMap::new();
    for (i, h) in hoods.iter().enumerate() {
        for v in h.iter() {
            touching.entry(v).or_default().push(i);
        }
    }
    let mut pairs = BTreeSet::new();
    for list in touching.values() {
        for (a, &i) in list.iter().enumerate() {
            for &j in &list[a + 1..] {
                pairs.insert((i.min(j), i.max(j)));
            }
        }
    }
    let pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
    let results: Vec<Best> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let inter = hoods[i].intersection(&hoods[j]);
            let (d, w) = set_diameter(g, &inter);
            let vertices = match w {
                Some((a, b)) => vec![a, b],
                None => inter.iter().take(1).collect(),
            };
            Best::new(d, vertices, vec![i, j], "diam of neighborhood intersection")
        })
        .collect();
    let best = Best::fold(results);
    report.set("B", &best);
    report.set_samples("pairs", fam.len() * fam.len().saturating_sub(1) / 2);
    report.set_samples("intersecting_pairs", pairs.len());
    report.constants.insert("diameter".into(), Real(diameter));
    report.witnesses.push(Witness {
        constant: "diameter".into(),
        value: Real(diameter),
        note: "graph diameter estimate".into(),
        ..Default::default()
    });
    if best.value > fraction * diameter + EPS {
        report.flag(best.witness("B"));
    }
    report
}

/// Shared sampling settings for the sampled audits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleParams {
    pub count: usize,
    pub seed: u64,
    /// Extra near-geodesics per pair for "any geodesic" quantifiers.
    pub perturbations: usize,
}

impl Default for SampleParams {
    fn default() -> Self {
        SampleParams {
            count: 200,
            seed: 0,
            perturbations: 3,
        }
    }
}

/// Canonical geodesic plus perturbed near-geodesics (total length within one
/// edge of the distance).
pub fn geodesics_for(g: &MetricGraph, x: Vertex, y: Vertex, sp: &SampleParams) -> Vec<PathInSpace> {
    geodesic_family(g, x, y, sp.perturbations, g.max_edge_length(), sp.seed)
}

/// Points of `pool` within `radius` of a member, with their distances.
fn near(g: &MetricGraph, member: &VertexSet, radius: f64, pool: &[bool]) -> Vec<(Vertex, f64)> {
    let mut v: Vec<(Vertex, f64)> = multi_source(g, member.as_slice(), radius)
        .into_iter()
        .filter(|&(w, _)| pool[w])
        .collect();
    v.sort_by_key(|&(w, _)| w);
    v
}

/// Geodesic-entry axiom: for sampled `x, y` with `d(x,P), d(y,P) <= eps d(x,y)`,
/// every inspected geodesic meets `N_M(P)`. Reports the smallest passing `M`.
pub fn check_alpha2(
    g: &MetricGraph,
    fam: &PeripheralFamily,
    eps: f64,
    m: f64,
    pool: &VertexSet,
    mode: Mode,
    perturbations: usize,
) -> ConstantsReport {
    let seed = match mode {
        Mode::Sampled { seed, .. } => seed,
        Mode::Exhaustive => 0,
    };
    let sp = SampleParams {
        count: 0,
        seed,
        perturbations,
    };
    let mut report = ConstantsReport::new("alpha2", mode.tag());
    let n = g.vertex_count();
    let pool_mask = pool.mask(n);
    let reach = eps * diameter_estimate(g);
    let mut pairs: Vec<(usize, Vertex, Vertex)> = Vec::new();
    let admissible = |field_d: &dyn Fn(Vertex) -> f64, x: Vertex, y: Vertex| {
        let dxy = g.distance(x, y);
        x != y && field_d(x) <= eps * dxy + EPS && field_d(y) <= eps * dxy + EPS
    };
    match mode {
        Mode::Exhaustive => {
            for (i, member) in fam.members.iter().enumerate() {
                let pts = near(g, member, reach, &pool_mask);
                let field = MemberField::new(g, member);
                for (a, &(x, _)) in pts.iter().enumerate() {
                    for &(y, _) in &pts[a + 1..] {
                        if admissible(&|v| field.dist[v], x, y) {
                            pairs.push((i, x, y));
                        }
                    }
                }
            }
        }
        Mode::Sampled { count, seed } => {
            if !fam.is_empty() {
                let mut rng = rng_for(seed, "alpha2");
                let mut cache: HashMap<usize, (Vec<(Vertex, f64)>, MemberField)> = HashMap::new();
                let mut attempts = 0;
                while pairs.len() < count && attempts < 50 * count {
                    attempts += 1;
                    let i = rng.gen_range(0..fam.len());
                    let (pts, field) = cache
                        .entry(i)
                        .or_insert_with(|| (near(g, &fam.members[i], reach, &pool_mask), MemberField::new(g, &fam.members[i])));
                    if pts.len() < 2 {
                        continue;
                    }
                    let x = pts[rng.gen_range(0..pts.len())].0;
                    let y = pts[rng.gen_range(0..pts.len())].0;
                    if admissible(&|v| field.dist[v], x, y) {
                        pairs.push((i, x.min(y), x.max(y)));
                    }
                }
            }
        }
    }
    report.set_samples("pairs", pairs.len());
    if pairs.is_empty() {
        report.note("no-admissible-pairs");
        return report;
    }
    let results: Vec<Best> = group_by_member(&pairs)
        .into_par_iter()
        .map(|(i, list)| {
            let field = MemberField::new(g, &fam.members[i]);
            let mut best = Best::default();
            for (x, y) in list {
                for path in geodesics_for(g, x, y, &sp) {
                    let closest = path.vertices.iter().map(|&v| field.dist[v]).fold(f64::INFINITY, f64::min);
                    best.offer(closest, || (vec![x, y], vec![i], "geodesic distance to member".into()));
                }
            }
            best
        })
        .collect();
    let best = Best::fold(results);
    report.set("M", &best);
    report.constants.insert("epsilon".into(), Real(eps));
    report.witnesses.push(Witness {
        constant: "epsilon".into(),
        value: Real(eps),
        note: "fixed per run".into(),
        ..Default::default()
    });
    if best.value > m + EPS {
        report.flag(best.witness("M"));
    }
    report
}

/// Groups `(member, x, y)` samples by member, preserving first-seen order.
fn group_by_member(samples: &[(usize, Vertex, Vertex)]) -> Vec<(usize, Vec<(Vertex, Vertex)>)> {
    let mut order: Vec<usize> = Vec::new();
    let mut groups: HashMap<usize, Vec<(Vertex, Vertex)>> = HashMap::new();
    for &(i, x, y) in samples {
        groups
            .entry(i)
            .or_insert_with(|| {
                order.push(i);
                Vec::new()
            })
            .push((x, y));
    }
    order
        .into_iter()
        .map(|i| (i, groups.remove(&i).unwrap()))
        .collect()
}

/// Parameters of the projection lemma audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionParams {
    /// Constant of the geodesic-entry axiom used as the target radius.
    pub m: f64,
    /// Neighborhood radius for the first-point constant (at least the
    /// measured ball constant is recommended).
    pub mu: f64,
    /// Radii `L` at which geodesic containment is probed.
    pub l_grid: Vec<f64>,
    pub sample: SampleParams,
    /// Exhaustive scan over member pairs for the projection diameter when
    /// the family has at most this many members.
    pub exhaustive_pairs_up_to: usize,
}

impl Default for ProjectionParams {
    fn default() -> Self {
        ProjectionParams {
            m: 1.0,
            mu: 2.0,
            l_grid: vec![1.0, 2.0, 3.0],
            sample: SampleParams::default(),
            exhaustive_pairs_up_to: 60,
        }
    }
}

/// Smallest threshold `T` such that "`gap < T` or `need <= T`" holds,
/// where gaps come in steps of `step`.
pub(crate) fn requirement(need: f64, gap: f64, step: f64) -> f64 {
    need.min(gap.max(0.0) + step).max(0.0)
}

/// Empirical constants of the projection lemmas:
/// `t` (geodesics between points of `N_L(P)` stay in `N_{tL}(P)`),
/// `R` (geodesics from `x` to `N_M(P)` pass near `π_P(x)`),
/// `L` (far-apart projections force geodesics through both `L`-balls),
/// `R'` (first entry point into `N_mu(P)` is near `π_P(x)`),
/// `C` (diameter of the projection of one member onto another),
/// `K` (geodesics pass near `P` at the right time).
pub fn audit_projection_lemmas(
    g: &MetricGraph,
    fam: &PeripheralFamily,
    pool: &VertexSet,
    params: &ProjectionParams,
) -> ConstantsReport {
    let sp = params.sample;
    let mut report = ConstantsReport::new("proj", Mode::Sampled { count: sp.count, seed: sp.seed }.tag());
    if fam.is_empty() || pool.is_empty() {
        report.note("empty family or pool");
        for name in ["t", "R", "L", "R'", "C", "K"] {
            report.set(name, &Best::default());
        }
        return report;
    }
    let n = g.vertex_count();
    let pool_mask = pool.mask(n);
    let pool_list = pool.as_slice();
    let step = g.min_edge_length();
    let reach = diameter_estimate(g) / 2.0;

    // Draw samples up front, sequentially, so results never depend on
    // scheduling. Each task is (lemma, member, x, y, extra).
    #[derive(Clone, Copy)]
    enum Task {
        Contain { l: f64, x: Vertex, y: Vertex },
        Proj1 { x: Vertex, y: Vertex },
        Proj2 { x: Vertex, y: Vertex },
        First { x: Vertex, y: Vertex },
        Timing { x: Vertex, y: Vertex },
    }
    let mut rng = rng_for(sp.seed, "projection-lemmas");
    let mut hood_cache: HashMap<usize, Vec<(Vertex, f64)>> = HashMap::new();
    let mut tasks: Vec<(usize, Task)> = Vec::new();
    let max_l = params.l_grid.iter().copied().fold(params.m, f64::max);
    let pick = |list: &[(Vertex, f64)], rng: &mut rand_chacha::ChaCha8Rng, bound: f64| -> Option<Vertex> {
        let within: Vec<Vertex> = list.iter().filter(|&&(_, d)| d <= bound + EPS).map(|&(v, _)| v).collect();
        (!within.is_empty()).then(|| within[rng.gen_range(0..within.len())])
    };
    for s in 0..sp.count {
        let i = rng.gen_range(0..fam.len());
        let hood = hood_cache
            .entry(i)
            .or_insert_with(|| near(g, &fam.members[i], reach.max(max_l).max(params.mu + 1.0), &pool_mask))
            .clone();
        let far_pick = |rng: &mut rand_chacha::ChaCha8Rng| pool_list[rng.gen_range(0..pool_list.len())];
        let task = match s % 5 {
            0 => {
                let l = params.l_grid[rng.gen_range(0..params.l_grid.len())];
                match (pick(&hood, &mut rng, l), pick(&hood, &mut rng, l)) {
                    (Some(x), Some(y)) => Some(Task::Contain { l, x, y }),
                    _ => None,
                }
            }
            1 => {
                let x = far_pick(&mut rng);
                pick(&hood, &mut rng, params.m).map(|y| Task::Proj1 { x, y })
            }
            2 => {
                let r = rng.gen_range(0.0..=reach.max(1.0));
                match (pick(&hood, &mut rng, r), pick(&hood, &mut rng, r)) {
                    (Some(x), Some(y)) => Some(Task::Proj2 { x, y }),
                    _ => None,
                }
            }
            3 => {
                let x = far_pick(&mut rng);
                pick(&hood, &mut rng, 0.0).map(|y| Task::First { x, y })
            }
            _ => {
                let r = rng.gen_range(0.0..=reach.max(1.0));
                match (pick(&hood, &mut rng, r), pick(&hood, &mut rng, r)) {
                    (Some(x), Some(y)) => Some(Task::Timing { x, y }),
                    _ => None,
                }
            }
        };
        if let Some(t) = task {
            tasks.push((i, t));
        }
    }

    let mut order: Vec<usize> = Vec::new();
    let mut grouped: HashMap<usize, Vec<Task>> = HashMap::new();
    for (i, t) in tasks {
        grouped
            .entry(i)
            .or_insert_with(|| {
                order.push(i);
                Vec::new()
            })
            .push(t);
    }
    let groups: Vec<(usize, Vec<Task>)> = order.into_iter().map(|i| (i, grouped.remove(&i).unwrap())).collect();

    // [t, R, L, R', K] accumulators and sample counts.
    let per_member: Vec<([Best; 5], [usize; 5])> = groups
        .par_iter()
        .map(|(i, list)| {
            let i = *i;
            let field = MemberField::new(g, &fam.members[i]);
            let mut acc: [Best; 5] = Default::default();
            let mut counts = [0usize; 5];
            for task in list {
                match *task {
                    Task::Contain { l, x, y } => {
                        counts[0] += 1;
                        for path in geodesics_for(g, x, y, &sp) {
                            for &p in &path.vertices {
                                acc[0].offer(field.dist[p] / l, || (vec![x, y, p], vec![i], format!("L={l}")));
                            }
                        }
                    }
                    Task::Proj1 { x, y } => {
                        counts[1] += 1;
                        let px = field.proj[x];
                        for path in geodesics_for(g, x, y, &sp) {
                            let need = path.vertices.iter().map(|&p| g.distance(p, px)).fold(f64::INFINITY, f64::min);
                            acc[1].offer(need, || (vec![x, y, px], vec![i], "geodesic to N_M(P) vs projection".into()));
                        }
                    }
                    Task::Proj2 { x, y } => {
                        counts[2] += 1;
                        let (px, py) = (field.proj[x], field.proj[y]);
                        let dpp = g.distance(px, py);
                        for path in geodesics_for(g, x, y, &sp) {
                            let nx = path.vertices.iter().map(|&p| g.distance(p, px)).fold(f64::INFINITY, f64::min);
                            let ny = path.vertices.iter().map(|&p| g.distance(p, py)).fold(f64::INFINITY, f64::min);
                            let req = requirement(nx.max(ny), dpp, step);
                            acc[2].offer(req, || (vec![x, y, px, py], vec![i], format!("d(proj)={dpp}")));
                        }
                    }
                    Task::First { x, y } => {
                        if field.dist[x] <= params.mu + EPS {
                            continue;
                        }
                        counts[3] += 1;
                        let px = field.proj[x];
                        for path in geodesics_for(g, x, y, &sp) {
                            if let Some(&p) = path.vertices.iter().find(|&&p| field.dist[p] <= params.mu + EPS) {
                                acc[3].offer(g.distance(p, px), || (vec![x, y, p, px], vec![i], format!("mu={}", params.mu)));
                            }
                        }
                    }
                    Task::Timing { x, y } => {
                        counts[4] += 1;
                        let slack = g.distance(x, y) - field.dist[x] - field.dist[y];
                        for path in geodesics_for(g, x, y, &sp) {
                            let need = path
                                .vertices
                                .iter()
                                .map(|&z| field.dist[z].max((g.distance(x, z) - field.dist[x]).abs()))
                                .fold(f64::INFINITY, f64::min);
                            let req = requirement(need, slack, step);
                            acc[4].offer(req, || (vec![x, y], vec![i], format!("slack={slack}")));
                        }
                    }
                }
            }
            (acc, counts)
        })
        .collect();
    let mut totals: [Best; 5] = Default::default();
    let mut counts = [0usize; 5];
    for (acc, c) in per_member {
        for k in 0..5 {
            totals[k] = std::mem::take(&mut totals[k]).merge(acc[k].clone());
            counts[k] += c[k];
        }
    }
    for (k, name) in ["t", "R", "L", "R'", "K"].iter().enumerate() {
        report.set(name, &totals[k]);
        report.set_samples(name, counts[k]);
    }

    // Projection diameter of one member onto another.
    let m = fam.len();
    let member_pairs: Vec<(usize, usize)> = if m * m <= params.exhaustive_pairs_up_to * params.exhaustive_pairs_up_to {
        (0..m).flat_map(|a| (0..m).filter(move |&b| b != a).map(move |b| (a, b))).collect()
    } else {
        let mut rng = rng_for(sp.seed, "projection-diameter");
        (0..sp.count)
            .filter_map(|_| {
                let a = rng.gen_range(0..m);
                let b = rng.gen_range(0..m);
                (a != b).then_some((a, b))
            })
            .collect()
    };
    let mut by_target: Vec<(usize, Vec<usize>)> = Vec::new();
    for &(a, b) in &member_pairs {
        match by_target.iter_mut().find(|(t, _)| *t == a) {
            Some((_, list)) => list.push(b),
            None => by_target.push((a, vec![b])),
        }
    }
    let c_results: Vec<Best> = by_target
        .par_iter()
        .map(|(a, sources)| {
            let field = MemberField::new(g, &fam.members[*a]);
            let mut best = Best::default();
            for &b in sources {
                let image: VertexSet = fam.members[b].iter().map(|x| field.proj[x]).collect();
                let (d, w) = set_diameter(g, &image);
                best.offer(d, || (w.map(|(u, v)| vec![u, v]).unwrap_or_default(), vec![*a, b], "projection image diameter".into()));
            }
            best
        })
        .collect();
    report.set("C", &Best::fold(c_results));
    report.set_samples("C", member_pairs.len());
    if m * m <= params.exhaustive_pairs_up_to * params.exhaustive_pairs_up_to {
        report.note("C: exhaustive over member pairs");
    }
    report
}
