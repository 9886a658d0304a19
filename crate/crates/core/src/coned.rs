//! The coned-off space: every pair of net points of a member joined by a
//! unit component edge. Standard paths, bounded coset penetration, the
//! hyperbolicity check of the coned graph and the filling of components
//! by ambient geodesics.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::graph::{GraphBuilder, MetricGraph, PathInSpace, Vertex, VertexSet, EPS};
use crate::metric::{kk_constant, maximal_net, DistanceMatrix, LocalMetric};
use crate::peripherals::{diameter_estimate, project, PeripheralFamily};
use crate::report::{Best, ConstantsReport};
use crate::sampling::{choose, rng_for, Mode};
use crate::shortest::geodesic;
use crate::transient::{pool_pairs, FamilyIndex};

/// Ambient graph plus component edges. Vertex ids are shared with the
/// ambient graph; an edge of `graph` is an ambient step exactly when the
/// ambient graph has an edge of the same length.
#[derive(Clone, Debug)]
pub struct ConedOffSpace {
    pub ambient: MetricGraph,
    pub graph: MetricGraph,
    pub nets: Vec<VertexSet>,
    pub k: f64,
    /// Members whose net contains each vertex, ascending.
    owners: Vec<Vec<usize>>,
}

/// Joins all pairs of points of a maximal `k`-net of each member.
pub fn build_coned_off(g: &MetricGraph, fam: &PeripheralFamily, k: f64) -> Result<ConedOffSpace, GraphError> {
    let n = g.vertex_count();
    let mut b = GraphBuilder::new(n);
    for (u, v, l) in g.edges() {
        b.add_edge(u, v, l)?;
    }
    let mut nets = Vec::with_capacity(fam.len());
    let mut owners = vec![Vec::new(); n];
    for (i, p) in fam.members.iter().enumerate() {
        if p.is_empty() {
            return Err(GraphError::EmptySet);
        }
        let net = if k <= 1.0 { p.clone() } else { maximal_net(g, p, k) };
        let list = net.as_slice();
        for (a, &x) in list.iter().enumerate() {
            owners[x].push(i);
            for &y in &list[a + 1..] {
                b.add_edge(x, y, 1.0)?;
            }
        }
        nets.push(net);
    }
    if let Some(labels) = g.labels() {
        b.set_labels(labels.to_vec());
    }
    Ok(ConedOffSpace {
        ambient: g.clone(),
        graph: b.build()?,
        nets,
        k,
        owners,
    })
}

impl ConedOffSpace {
    /// Number of component edges of member `i`.
    pub fn component_count(&self, i: usize) -> usize {
        let m = self.nets[i].len();
        m * m.saturating_sub(1) / 2
    }

    /// Least member whose net contains both endpoints.
    pub fn component_member(&self, x: Vertex, y: Vertex) -> Option<usize> {
        self.owners[x].iter().copied().find(|i| self.owners[y].contains(i))
    }

    fn is_ambient_step(&self, u: Vertex, v: Vertex, length: f64) -> bool {
        self.ambient.edge_length(u, v).is_some_and(|l| (l - length).abs() <= EPS)
    }

    /// Standard form of a path in the coned graph.
    pub fn standard_path(&self, path: &PathInSpace) -> Result<StandardPath, GraphError> {
        let mut pieces = Vec::new();
        let mut seg = vec![path.start()];
        for (i, w) in path.vertices.windows(2).enumerate() {
            let (u, v) = (w[0], w[1]);
            if self.is_ambient_step(u, v, path.arclength(i, i + 1)) {
                seg.push(v);
                continue;
            }
            let member = self.component_member(u, v).ok_or(GraphError::NotAnEdge(u, v))?;
            pieces.push(Piece::Segment(std::mem::replace(&mut seg, vec![v])));
            pieces.push(Piece::Component { member, x: u, y: v });
        }
        pieces.push(Piece::Segment(seg));
        Ok(StandardPath::normalized(pieces))
    }

    /// Standard form of the canonical coned geodesic.
    pub fn canonical(&self, x: Vertex, y: Vertex) -> StandardPath {
        self.standard_path(&geodesic(&self.graph, x, y)).expect("coned edges are ambient steps or components")
    }
}

/// One piece of a standard path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Piece {
    /// Ambient path, listed by vertices.
    Segment(Vec<Vertex>),
    Component { member: usize, x: Vertex, y: Vertex },
}

/// Concatenation of ambient segments and component edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StandardPath {
    pub pieces: Vec<Piece>,
}

/// Classification of the components of a standard path.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathAnalysis {
    pub components: usize,
    /// Piece indices of components of the same member.
    pub tied_pairs: Vec<(usize, usize)>,
    pub without_backtracking: bool,
}

impl StandardPath {
    /// Drops empty segments and merges adjacent ones.
    fn normalized(pieces: Vec<Piece>) -> StandardPath {
        let first = pieces[0].clone();
        let mut out: Vec<Piece> = Vec::new();
        for p in pieces {
            match (out.last_mut(), p) {
                (_, Piece::Segment(b)) if b.len() == 1 => {}
                (Some(Piece::Segment(a)), Piece::Segment(b)) => a.extend(b.into_iter().skip(1)),
                (_, p) => out.push(p),
            }
        }
        if out.is_empty() {
            out.push(first);
        }
        StandardPath { pieces: out }
    }

    /// Builds `[x, p]` + component `(p, q)` + `[q, y]` from ambient geodesics.
    pub fn through(g: &MetricGraph, member: usize, x: Vertex, p: Vertex, q: Vertex, y: Vertex) -> StandardPath {
        StandardPath::normalized(vec![
            Piece::Segment(geodesic(g, x, p).vertices),
            Piece::Component { member, x: p, y: q },
            Piece::Segment(geodesic(g, q, y).vertices),
        ])
    }

    pub fn start(&self) -> Vertex {
        match &self.pieces[0] {
            Piece::Segment(s) => s[0],
            Piece::Component { x, .. } => *x,
        }
    }

    pub fn end(&self) -> Vertex {
        match self.pieces.last().unwrap() {
            Piece::Segment(s) => *s.last().unwrap(),
            Piece::Component { y, .. } => *y,
        }
    }

    /// Components in traversal order as `(piece index, member, x, y)`.
    pub fn components(&self) -> Vec<(usize, usize, Vertex, Vertex)> {
        self.pieces
            .iter()
            .enumerate()
            .filter_map(|(i, p)| match *p {
                Piece::Component { member, x, y } => Some((i, member, x, y)),
                Piece::Segment(_) => None,
            })
            .collect()
    }

    /// Checks that pieces meet, segments follow ambient edges and components
    /// join net points of their member.
    pub fn validate(&self, coned: &ConedOffSpace) -> Result<(), GraphError> {
        if self.pieces.is_empty() {
            return Err(GraphError::EmptyPath);
        }
        let mut at: Option<Vertex> = None;
        for p in &self.pieces {
            let (s, e) = match p {
                Piece::Segment(s) => {
                    if s.is_empty() {
                        return Err(GraphError::EmptyPath);
                    }
                    PathInSpace::from_vertices(&coned.ambient, s.clone())?;
                    (s[0], *s.last().unwrap())
                }
                Piece::Component { member, x, y } => {
                    let net = coned.nets.get(*member).ok_or(GraphError::NotAnEdge(*x, *y))?;
                    if x == y || !net.contains(*x) || !net.contains(*y) {
                        return Err(GraphError::NotAnEdge(*x, *y));
                    }
                    (*x, *y)
                }
            };
            if let Some(a) = at {
                if a != s {
                    return Err(GraphError::Discontinuous(a, s));
                }
            }
            at = Some(e);
        }
        Ok(())
    }

    pub fn analyze(&self) -> PathAnalysis {
        let comps = self.components();
        let mut tied_pairs = Vec::new();
        for (a, c) in comps.iter().enumerate() {
            for d in &comps[a + 1..] {
                if c.1 == d.1 {
                    tied_pairs.push((c.0, d.0));
                }
            }
        }
        PathAnalysis {
            components: comps.len(),
            without_backtracking: tied_pairs.is_empty(),
            tied_pairs,
        }
    }

    /// Vertices in order with coned arclength (components count 1).
    pub fn coned_walk(&self, g: &MetricGraph) -> (Vec<Vertex>, Vec<f64>) {
        let mut vs = vec![self.start()];
        let mut cum = vec![0.0];
        for p in &self.pieces {
            match p {
                Piece::Segment(s) => {
                    for w in s.windows(2) {
                        vs.push(w[1]);
                        cum.push(cum.last().unwrap() + g.edge_length(w[0], w[1]).unwrap_or(1.0));
                    }
                }
                Piece::Component { y, .. } => {
                    vs.push(*y);
                    cum.push(cum.last().unwrap() + 1.0);
                }
            }
        }
        (vs, cum)
    }

    /// Least integer `L >= 1` with `arclength <= L d + L` in the coned metric
    /// on all subpaths.
    pub fn quasi_constant(&self, coned: &ConedOffSpace) -> usize {
        let (vs, cum) = self.coned_walk(&coned.ambient);
        let local = LocalMetric::new(&coned.graph, vs.iter().copied());
        let mut l = 1usize;
        for i in 0..vs.len() {
            for j in i + 1..vs.len() {
                let a = cum[j] - cum[i];
                let need = (a / (local.d(vs[i], vs[j]) + 1.0) - EPS).ceil().max(1.0) as usize;
                l = l.max(need);
            }
        }
        l
    }

    /// `SEG <v...>` / `CMP <member> <x> <y>` records, one per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.pieces {
            match p {
                Piece::Segment(vs) => {
                    s.push_str("SEG");
                    for v in vs {
                        write!(s, " {v}").unwrap();
                    }
                    s.push('\n');
                }
                Piece::Component { member, x, y } => writeln!(s, "CMP {member} {x} {y}").unwrap(),
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<StandardPath, GraphError> {
        let mut pieces = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let tag = it.next().unwrap();
            let nums: Vec<usize> = it
                .map(|t| t.parse().map_err(|_| GraphError::parse(i + 1, format!("bad number {t:?}"))))
                .collect::<Result<_, _>>()?;
            match tag {
                "SEG" if !nums.is_empty() => pieces.push(Piece::Segment(nums)),
                "CMP" if nums.len() == 3 => pieces.push(Piece::Component {
                    member: nums[0],
                    x: nums[1],
                    y: nums[2],
                }),
                _ => return Err(GraphError::parse(i + 1, format!("unexpected record {line:?}"))),
            }
        }
        if pieces.is_empty() {
            return Err(GraphError::EmptyPath);
        }
        Ok(StandardPath { pieces })
    }
}

/// Outcome of one pair of standard paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BcpOutcome {
    pub pair: usize,
    /// Larger quasi-geodesic constant of the two paths.
    pub l: usize,
    /// Least `K` for clause (1): every untied component is shorter than `K`.
    pub k1: f64,
    /// Least `K` for clause (2): entry and exit points of tied components.
    pub k2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BcpParams {
    pub l_grid: Vec<usize>,
    /// Flag a violation when the required `K` exceeds this fraction of the
    /// ambient diameter.
    pub fraction: f64,
}

impl Default for BcpParams {
    fn default() -> Self {
        BcpParams {
            l_grid: vec![2, 4],
            fraction: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BcpReport {
    pub outcomes: Vec<BcpOutcome>,
    pub report: ConstantsReport,
}

fn component_length(g: &MetricGraph, x: Vertex, y: Vertex) -> f64 {
    g.distance(x, y)
}

/// Clause (1) and (2) requirements of one ordered pair, with witnesses.
fn bcp_pair(g: &MetricGraph, a: &StandardPath, b: &StandardPath) -> (Best, Best) {
    let (ca, cb) = (a.components(), b.components());
    let mut k1 = Best::default();
    let mut k2 = Best::default();
    for (own, other) in [(&ca, &cb), (&cb, &ca)] {
        for &(_, m, x, y) in own.iter() {
            match other.iter().find(|c| c.1 == m) {
                None => {
                    let len = component_length(g, x, y);
                    k1.offer(len.floor() + 1.0, || (vec![x, y], vec![m], "untied component".into()));
                }
                Some(&(_, _, x2, y2)) => {
                    let d = g.distance(x, x2).max(g.distance(y, y2));
                    k2.offer(d, || (vec![x, y, x2, y2], vec![m], "tied components".into()));
                }
            }
        }
    }
    (k1, k2)
}

/// Bounded coset penetration over the given pairs. Pairs with backtracking
/// or endpoints more than 1 apart are reported and skipped.
pub fn check_bcp(coned: &ConedOffSpace, pairs: &[(StandardPath, StandardPath)], params: &BcpParams) -> BcpReport {
    let g = &coned.ambient;
    let results: Vec<(BcpOutcome, Best, Best)> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let mut out = BcpOutcome {
                pair: i,
                l: 0,
                k1: 0.0,
                k2: 0.0,
                error: None,
            };
            let problem = if let Err(e) = a.validate(coned).and_then(|_| b.validate(coned)) {
                Some(e.to_string())
            } else if !a.analyze().without_backtracking || !b.analyze().without_backtracking {
                Some("backtracking".to_string())
            } else if g.distance(a.start(), b.start()) > 1.0 + EPS || g.distance(a.end(), b.end()) > 1.0 + EPS {
                Some("endpoints more than 1 apart".to_string())
            } else {
                None
            };
            if problem.is_some() {
                out.error = problem;
                return (out, Best::default(), Best::default());
            }
            out.l = a.quasi_constant(coned).max(b.quasi_constant(coned));
            let (k1, k2) = bcp_pair(g, a, b);
            out.k1 = k1.value;
            out.k2 = k2.value;
            (out, k1, k2)
        })
        .collect();
    let mut report = ConstantsReport::new("bcp", Mode::Exhaustive.tag());
    let diameter = diameter_estimate(g);
    let mut grid = params.l_grid.clone();
    grid.sort_unstable();
    let mut all = (Best::default(), Best::default());
    let mut per_l: Vec<(Best, Best, usize)> = vec![(Best::default(), Best::default(), 0); grid.len()];
    let mut skipped = 0;
    for (o, k1, k2) in &results {
        if o.error.is_some() {
            skipped += 1;
            continue;
        }
        all.0 = std::mem::take(&mut all.0).merge(k1.clone());
        all.1 = std::mem::take(&mut all.1).merge(k2.clone());
        for (slot, &l) in per_l.iter_mut().zip(&grid) {
            if o.l <= l {
                slot.0 = std::mem::take(&mut slot.0).merge(k1.clone());
                slot.1 = std::mem::take(&mut slot.1).merge(k2.clone());
                slot.2 += 1;
            }
        }
    }
    report.set("K1", &all.0);
    report.set("K2", &all.1);
    report.set("K", &all.0.clone().merge(all.1.clone()));
    report.set_samples("pairs", pairs.len() - skipped);
    for ((k1, k2, count), l) in per_l.into_iter().zip(&grid) {
        let k = k1.merge(k2);
        let name = format!("K(L={l})");
        if k.value > params.fraction * diameter + EPS {
            report.flag(k.witness(&name));
        }
        report.set(&name, &k);
        report.set_samples(&name, count);
    }
    if skipped > 0 {
        report.note(format!("skipped-pairs:{skipped}"));
    }
    BcpReport {
        outcomes: results.into_iter().map(|r| r.0).collect(),
        report,
    }
}

/// Sampling budgets of the coned-off audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rh2Params {
    /// Endpoint pairs drawn from the pool.
    pub pairs: usize,
    /// Endpoint pairs drawn inside single members.
    pub member_pairs: usize,
    /// Perturbed endpoint pairs per sampled pair.
    pub perturbations: usize,
    /// Members within this distance of both endpoints give detour candidates.
    pub detour_mu: f64,
    pub bcp: BcpParams,
    /// Four-point delta: exhaustive over a seeded subsample this size.
    pub subsample: usize,
    pub seed: u64,
}

impl Default for Rh2Params {
    fn default() -> Self {
        Rh2Params {
            pairs: 60,
            member_pairs: 40,
            perturbations: 6,
            detour_mu: 1.0,
            bcp: BcpParams::default(),
            subsample: 120,
            seed: 0,
        }
    }
}

/// Canonical standard path from `x` to `y` plus one detour through each
/// nearby member.
pub fn candidate_paths(coned: &ConedOffSpace, index: &FamilyIndex, x: Vertex, y: Vertex) -> Vec<StandardPath> {
    let mut out = vec![coned.canonical(x, y)];
    let near_y: Vec<usize> = index.within(y, index.radius()).collect();
    for m in index.within(x, index.radius()) {
        if !near_y.contains(&m) {
            continue;
        }
        let net = &coned.nets[m];
        let (p, q) = (project(&coned.ambient, x, net).unwrap(), project(&coned.ambient, y, net).unwrap());
        if p != q {
            let sp = StandardPath::through(&coned.ambient, m, x, p, q, y);
            if !out.contains(&sp) {
                out.push(sp);
            }
        }
    }
    out
}

/// Hyperbolicity of the coned graph and bounded coset penetration over
/// generated candidate pairs.
pub fn check_rh2(coned: &ConedOffSpace, pool: &VertexSet, params: &Rh2Params) -> (ConstantsReport, BcpReport) {
    let g = &coned.ambient;
    let mut report = ConstantsReport::new(
        "rh2",
        Mode::Sampled {
            count: params.pairs,
            seed: params.seed,
        }
        .tag(),
    );
    let chosen = choose(pool.as_slice(), params.subsample, params.seed, "rh2-delta");
    let est = DistanceMatrix::new(&coned.graph, &chosen).four_point_delta(&Mode::Exhaustive);
    let delta = match est.witness {
        Some(q) => Best::new(est.delta, q.to_vec(), Vec::new(), "four-point quadruple"),
        None => Best::default(),
    };
    report.set("delta", &delta);
    report.set_samples("quadruples", est.samples);

    let mut endpoints = pool_pairs(
        pool,
        Mode::Sampled {
            count: params.pairs,
            seed: params.seed,
        },
        "rh2-pairs",
    );
    let in_pool = pool.mask(g.vertex_count());
    let members: Vec<usize> = (0..coned.nets.len()).filter(|&i| coned.nets[i].len() >= 2).collect();
    if !members.is_empty() {
        let mut rng = rng_for(params.seed, "rh2-member-pairs");
        for _ in 0..params.member_pairs {
            let m = *members.choose(&mut rng).unwrap();
            let inside: Vec<Vertex> = coned.nets[m].iter().filter(|&v| in_pool[v]).collect();
            if inside.len() >= 2 {
                let pick: Vec<Vertex> = inside.choose_multiple(&mut rng, 2).copied().collect();
                endpoints.push((pick[0].min(pick[1]), pick[0].max(pick[1])));
            }
        }
    }
    let index = FamilyIndex::new(g, &PeripheralFamily::new(coned.nets.clone(), 1.0), params.detour_mu);
    let mut rng = rng_for(params.seed, "rh2-perturb");
    let mut jobs: Vec<((Vertex, Vertex), (Vertex, Vertex))> = Vec::new();
    for &(x, y) in &endpoints {
        let around = |v: Vertex| -> Vec<Vertex> {
            std::iter::once(v)
                .chain(g.neighbors(v).iter().filter(|e| e.1 <= 1.0 + EPS).map(|e| e.0))
                .collect()
        };
        let (ax, ay) = (around(x), around(y));
        jobs.push(((x, y), (x, y)));
        for _ in 0..params.perturbations {
            let (x2, y2) = (*ax.choose(&mut rng).unwrap(), *ay.choose(&mut rng).unwrap());
            if x2 != y2 && (x2, y2) != (x, y) {
                jobs.push(((x, y), (x2, y2)));
            }
        }
    }
    let pairs: Vec<(StandardPath, StandardPath)> = jobs
        .par_iter()
        .flat_map_iter(|&((x, y), (x2, y2))| {
            let a = candidate_paths(coned, &index, x, y);
            let b = if (x2, y2) == (x, y) { a.clone() } else { candidate_paths(coned, &index, x2, y2) };
            let mut out = Vec::new();
            for p in &a {
                for q in &b {
                    out.push((p.clone(), q.clone()));
                }
            }
            out
        })
        .collect();
    let bcp = check_bcp(coned, &pairs, &params.bcp);
    for (name, value) in &bcp.report.constants {
        report.constants.insert(name.clone(), *value);
    }
    report.witnesses.extend(bcp.report.witnesses.iter().cloned());
    for w in &bcp.report.violations {
        report.flag(w.clone());
    }
    report.set_samples("pairs", pairs.len());
    report.notes.extend(bcp.report.notes.iter().cloned());
    (report, bcp)
}

/// An ambient path obtained by filling the components of a coned path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Filled {
    pub path: PathInSpace,
    /// Least integer `K` with `arclength <= K d + K^2` on all subpaths.
    pub k: usize,
    pub components: usize,
}

/// Replaces every component edge of a coned path by the canonical ambient
/// geodesic between its endpoints.
pub fn fill_components(coned: &ConedOffSpace, path: &PathInSpace) -> Result<Filled, GraphError> {
    let sp = coned.standard_path(path)?;
    let g = &coned.ambient;
    let mut out = vec![sp.start()];
    for p in &sp.pieces {
        match p {
            Piece::Segment(s) => out.extend(s.iter().skip(1)),
            Piece::Component { x, y, .. } => out.extend(geodesic(g, *x, *y).vertices.into_iter().skip(1)),
        }
    }
    let result = PathInSpace::from_vertices(g, out)?;
    let local = LocalMetric::new(g, result.vertices.iter().copied());
    let k = kk_constant(&result, |a, b| local.d(a, b));
    Ok(Filled {
        path: result,
        k,
        components: sp.components().len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cayley::{build_ball, peripheral_cosets, CosetSpec, GroupSpec};

    fn line(n: usize) -> MetricGraph {
        let mut b = GraphBuilder::new(n);
        for i in 0..n - 1 {
            b.add_edge(i, i + 1, 1.0).unwrap();
        }
        b.build().unwrap()
    }

    #[test]
    fn empty_family_is_the_ambient_graph() {
        let g = line(6);
        let c = build_coned_off(&g, &PeripheralFamily::empty(), 1.0).unwrap();
        assert_eq!(c.graph.edges(), g.edges());
        let f = fill_components(&c, &geodesic(&c.graph, 0, 5)).unwrap();
        assert_eq!((f.k, f.components), (1, 0));
    }

    #[test]
    fn line_member_gets_all_pairs() {
        let g = line(11);
        let fam = PeripheralFamily::new(vec![g.all_vertices()], 1.0);
        let c = build_coned_off(&g, &fam, 1.0).unwrap();
        assert_eq!(c.component_count(0), 55);
        assert_eq!(c.graph.edge_count(), 55);
        let sp = c.canonical(0, 10);
        assert_eq!(sp.components(), vec![(0, 0, 0, 10)]);
        let f = fill_components(&c, &geodesic(&c.graph, 0, 10)).unwrap();
        assert_eq!(f.path.vertices, (0..11).collect::<Vec<_>>());
        assert_eq!(f.k, 1);
    }

    #[test]
    fn tied_and_isolated_components() {
        let seg = |v: Vec<usize>| Piece::Segment(v);
        let none = StandardPath { pieces: vec![seg(vec![0, 1])] };
        assert!(none.analyze().without_backtracking);
        let tied = StandardPath {
            pieces: vec![
                Piece::Component { member: 0, x: 0, y: 2 },
                seg(vec![2, 3]),
                Piece::Component { member: 0, x: 3, y: 5 },
            ],
        };
        let a = tied.analyze();
        assert_eq!(a.tied_pairs, vec![(0, 2)]);
        assert!(!a.without_backtracking);
        let isolated = StandardPath {
            pieces: vec![
                Piece::Component { member: 0, x: 0, y: 2 },
                seg(vec![2, 3]),
                Piece::Component { member: 1, x: 3, y: 5 },
            ],
        };
        assert!(isolated.analyze().without_backtracking);
        assert_eq!(StandardPath::from_text(&isolated.to_text()).unwrap(), isolated);
    }

    #[test]
    fn bcp_identity_and_axis_shortcut() {
        let ball = build_ball(&GroupSpec::Free(2), 4).unwrap();
        let fam = peripheral_cosets(&ball, &[CosetSpec::generated_by("a", 2).unwrap()], 2).unwrap();
        let c = build_coned_off(&ball.graph, &fam, 1.0).unwrap();
        let x = ball.vertex_of("AAA").unwrap().unwrap();
        let y = ball.vertex_of("aaa").unwrap().unwrap();
        let g = c.canonical(x, y);
        assert_eq!(g.components().len(), 1);
        let r = check_bcp(&c, &[(g.clone(), g.clone())], &BcpParams::default());
        assert_eq!(r.report.get("K2"), Some(0.0));
        let tree = StandardPath {
            pieces: vec![Piece::Segment(geodesic(&ball.graph, x, y).vertices)],
        };
        let r = check_bcp(&c, &[(g, tree)], &BcpParams::default());
        assert_eq!(r.report.get("K1"), Some(7.0));
        assert_eq!(r.outcomes[0].l, 3);
    }

    #[test]
    fn parallel_lines_violate_bcp() {
        let ball = build_ball(&GroupSpec::FreeAbelian(2), 5).unwrap();
        let fam = peripheral_cosets(&ball, &[CosetSpec::generated_by("a", 2).unwrap()], 3).unwrap();
        let c = build_coned_off(&ball.graph, &fam, 1.0).unwrap();
        let v = |w: &str| ball.vertex_of(w).unwrap().unwrap();
        let (x, y, x2, y2) = (v("AAA"), v("aaa"), v("AAAb"), v("aaab"));
        let (a, b) = (c.canonical(x, y), c.canonical(x2, y2));
        assert_eq!(a.components().len(), 1);
        let r = check_bcp(&c, &[(a, b)], &BcpParams::default());
        assert_eq!(r.report.get("K(L=2)"), Some(7.0));
        assert!(r.report.violation);
    }
}
