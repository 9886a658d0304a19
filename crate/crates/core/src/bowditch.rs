//! Combinatorial horoballs glued along nets of the peripheral members, the
//! hyperbolicity check of the glued space and the comparison of its
//! geodesics with transient sets in the ambient graph.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::graph::{GraphBuilder, MetricGraph, PathInSpace, Vertex, VertexSet, EPS};
use crate::metric::{kk_constant, maximal_net, DistanceMatrix, LocalMetric};
use crate::peripherals::PeripheralFamily;
use crate::report::{Best, ConstantsReport};
use crate::sampling::{choose, Mode};
use crate::shortest::{geodesic, multi_source};
use crate::transient::{transient_geodesic, FamilyIndex, TransientParams};

/// Horoball over `base`, truncated at `depth`. Vertex `(v, n)` has id
/// `n * |base| + v`.
#[derive(Clone, Debug)]
pub struct Horoball {
    pub base: MetricGraph,
    pub depth: usize,
    pub graph: MetricGraph,
}

impl Horoball {
    pub fn vertex(&self, v: Vertex, level: usize) -> Vertex {
        level * self.base.vertex_count() + v
    }

    /// `(base vertex, level)` of a horoball vertex.
    pub fn split(&self, id: Vertex) -> (Vertex, usize) {
        let n = self.base.vertex_count();
        (id % n, id / n)
    }
}

/// Builds the horoball: unit vertical edges and, at level `n`, a copy of every
/// base edge scaled by `e^{-n}`.
pub fn build_horoball(base: &MetricGraph, depth: usize) -> Result<Horoball, GraphError> {
    if depth == 0 {
        return Err(GraphError::ZeroDepth);
    }
    let n = base.vertex_count();
    let mut b = GraphBuilder::new(n * (depth + 1));
    let edges = base.edges();
    for level in 0..=depth {
        let scale = (-(level as f64)).exp();
        for &(u, v, l) in &edges {
            b.add_edge(level * n + u, level * n + v, scale * l)?;
        }
        if level < depth {
            for v in 0..n {
                b.add_edge(level * n + v, (level + 1) * n + v, 1.0)?;
            }
        }
    }
    Ok(Horoball {
        base: base.clone(),
        depth,
        graph: b.build()?,
    })
}

/// Graph on a maximal `k`-net of a member, joining net points within
/// ambient distance `r` by an edge of length `r`.
#[derive(Clone, Debug)]
pub struct ApproximationGraph {
    pub net: VertexSet,
    pub k: f64,
    pub r: f64,
    /// Vertex `i` is `net[i]`.
    pub graph: MetricGraph,
}

pub fn build_approximation_graph(g: &MetricGraph, p: &VertexSet, k: f64, r: f64) -> Result<ApproximationGraph, GraphError> {
    if p.is_empty() {
        return Err(GraphError::EmptySet);
    }
    let net = maximal_net(g, p, k);
    let list = net.as_slice();
    let mut index = vec![usize::MAX; g.vertex_count()];
    for (i, &v) in list.iter().enumerate() {
        index[v] = i;
    }
    let mut b = GraphBuilder::new(list.len());
    let mut parent: Vec<usize> = (0..list.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, &v) in list.iter().enumerate() {
        for (w, d) in multi_source(g, &[v], r) {
            let j = index[w];
            if j != usize::MAX && j > i && d <= r + EPS {
                b.add_edge(i, j, r)?;
                let (a, c) = (find(&mut parent, i), find(&mut parent, j));
                if a != c {
                    parent[a.max(c)] = a.min(c);
                }
            }
        }
    }
    let roots: Vec<usize> = (0..list.len()).filter(|&i| find(&mut parent, i) == i).collect();
    if roots.len() > 1 {
        return Err(GraphError::NetDisconnected(list[roots[0]], list[roots[1]], roots.len()));
    }
    Ok(ApproximationGraph {
        net,
        k,
        r,
        graph: b.build()?,
    })
}

/// What a vertex of the glued space stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum BowVertex {
    X { vertex: Vertex },
    Horoball { member: usize, level: usize, base: Vertex },
}

/// One glued horoball: levels `1..=depth` over the net of a member.
#[derive(Clone, Debug)]
pub struct BowMember {
    pub approx: ApproximationGraph,
    pub horoball: Horoball,
    offset: usize,
}

impl BowMember {
    pub fn depth(&self) -> usize {
        self.horoball.depth
    }

    /// Id in the glued space of net vertex `j` at `level >= 1`.
    fn id(&self, j: usize, level: usize) -> Vertex {
        self.offset + j * self.depth() + (level - 1)
    }
}

/// Upper envelope `g` with `d_X <= g(d_Bow)` on sampled pairs of ambient
/// vertices: `bounds[b]` is the largest `d_X` seen with `d_Bow <= b`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoarseMap {
    pub bounds: Vec<f64>,
    pub samples: usize,
    /// Sampled pairs with `d_Bow > d_X`.
    pub shortcut_failures: usize,
}

impl CoarseMap {
    /// `g(d)`, or `None` beyond the sampled range.
    pub fn bound(&self, d_bow: f64) -> Option<f64> {
        let b = (d_bow - EPS).ceil().max(0.0) as usize;
        self.bounds.get(b).copied()
    }
}

/// The ambient graph with a truncated horoball glued along a net of each
/// member. Ambient vertices keep their ids; horoball vertices follow.
#[derive(Clone, Debug)]
pub struct BowditchSpace {
    pub ambient: MetricGraph,
    pub graph: MetricGraph,
    pub members: Vec<BowMember>,
    pub k: f64,
    pub r: f64,
    pub coarse_map: CoarseMap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BowditchParams {
    pub k: f64,
    pub r: f64,
    /// Fixed depth; `None` uses [`default_depth`] per member.
    pub depth: Option<usize>,
    /// Ambient sources whose rows define the coarse map.
    pub coarse_sources: usize,
    pub seed: u64,
}

impl Default for BowditchParams {
    fn default() -> Self {
        BowditchParams {
            k: 2.0,
            r: 2.0,
            depth: None,
            coarse_sources: 12,
            seed: 0,
        }
    }
}

/// `ceil(log2(diam))+2` of the approximation graph, capped at 15.
pub fn default_depth(approx: &ApproximationGraph) -> usize {
    let diam = approx.graph.diameter().max(1.0);
    ((diam.log2() - EPS).ceil().max(0.0) as usize + 2).min(15)
}

pub fn build_bowditch(g: &MetricGraph, fam: &PeripheralFamily, params: &BowditchParams) -> Result<BowditchSpace, GraphError> {
    let n = g.vertex_count();
    let mut members = Vec::with_capacity(fam.len());
    let mut offset = n;
    for p in &fam.members {
        let approx = build_approximation_graph(g, p, params.k, params.r)?;
        let depth = params.depth.unwrap_or_else(|| default_depth(&approx));
        let horoball = build_horoball(&approx.graph, depth)?;
        let size = approx.net.len() * depth;
        members.push(BowMember {
            approx,
            horoball,
            offset,
        });
        offset += size;
    }
    let mut b = GraphBuilder::new(offset);
    for (u, v, l) in g.edges() {
        b.add_edge(u, v, l)?;
    }
    let mut labels: Vec<String> = (0..n).map(|v| g.label(v).map_or_else(|| v.to_string(), str::to_string)).collect();
    for (i, m) in members.iter().enumerate() {
        let net = m.approx.net.as_slice();
        let depth = m.depth();
        for (j, &x) in net.iter().enumerate() {
            b.add_edge(x, m.id(j, 1), 1.0)?;
            for level in 1..=depth {
                labels.push(format!("H:{i}:{level}:{x}"));
                if level < depth {
                    b.add_edge(m.id(j, level), m.id(j, level + 1), 1.0)?;
                }
            }
        }
        for (u, v, l) in m.approx.graph.edges() {
            b.add_edge(net[u], net[v], l)?;
            for level in 1..=depth {
                b.add_edge(m.id(u, level), m.id(v, level), (-(level as f64)).exp() * l)?;
            }
        }
    }
    b.set_labels(labels);
    let graph = b.build()?;
    let coarse_map = coarse_map(g, &graph, params.coarse_sources, params.seed);
    Ok(BowditchSpace {
        ambient: g.clone(),
        graph,
        members,
        k: params.k,
        r: params.r,
        coarse_map,
    })
}

fn coarse_map(x: &MetricGraph, bow: &MetricGraph, sources: usize, seed: u64) -> CoarseMap {
    let n = x.vertex_count();
    let all: Vec<Vertex> = (0..n).collect();
    let chosen = choose(&all, sources, seed, "coarse-map");
    let rows: Vec<(Vec<f64>, usize)> = chosen
        .par_iter()
        .map(|&s| {
            let (dx, db) = (x.distances_from(s), bow.distances_from(s));
            let mut bounds: Vec<f64> = Vec::new();
            let mut failures = 0;
            for v in 0..n {
                if db[v] > dx[v] + EPS {
                    failures += 1;
                }
                let b = (db[v] - EPS).ceil().max(0.0) as usize;
                if bounds.len() <= b {
                    bounds.resize(b + 1, 0.0);
                }
                bounds[b] = bounds[b].max(dx[v]);
            }
            (bounds, failures)
        })
        .collect();
    let mut map = CoarseMap {
        samples: chosen.len() * n,
        ..Default::default()
    };
    for (bounds, failures) in rows {
        map.shortcut_failures += failures;
        if map.bounds.len() < bounds.len() {
            map.bounds.resize(bounds.len(), 0.0);
        }
        for (b, v) in bounds.into_iter().enumerate() {
            map.bounds[b] = map.bounds[b].max(v);
        }
    }
    for b in 1..map.bounds.len() {
        map.bounds[b] = map.bounds[b].max(map.bounds[b - 1]);
    }
    map
}

impl BowditchSpace {
    pub fn ambient_count(&self) -> usize {
        self.ambient.vertex_count()
    }

    pub fn is_ambient(&self, v: Vertex) -> bool {
        v < self.ambient_count()
    }

    pub fn back(&self, v: Vertex) -> BowVertex {
        if self.is_ambient(v) {
            return BowVertex::X { vertex: v };
        }
        let i = self.members.partition_point(|m| m.offset <= v) - 1;
        let m = &self.members[i];
        let j = (v - m.offset) / m.depth();
        BowVertex::Horoball {
            member: i,
            level: (v - m.offset) % m.depth() + 1,
            base: m.approx.net.as_slice()[j],
        }
    }

    /// Ambient vertices in `pool` together with every horoball vertex above
    /// a net point of `pool`.
    pub fn lift_pool(&self, pool: &VertexSet) -> VertexSet {
        let mut out: Vec<Vertex> = pool.iter().collect();
        for m in &self.members {
            for (j, x) in m.approx.net.iter().enumerate() {
                if pool.contains(x) {
                    out.extend((1..=m.depth()).map(|level| m.id(j, level)));
                }
            }
        }
        VertexSet::new(out)
    }

    /// Graph text followed by one `BACKMAP` line per vertex.
    pub fn to_text(&self) -> String {
        let mut s = self.graph.to_text();
        for v in 0..self.graph.vertex_count() {
            match self.back(v) {
                BowVertex::X { vertex } => writeln!(s, "BACKMAP {v} {vertex}"),
                BowVertex::Horoball { member, level, base } => writeln!(s, "BACKMAP {v} H:{member}:{level} {base}"),
            }
            .expect("write to string");
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rh1Params {
    /// Graphs up to this size are checked exhaustively on all vertices.
    pub exhaustive_up_to: usize,
    /// Otherwise, quadruples are exhaustive over a seeded subsample this size.
    pub subsample: usize,
    pub seed: u64,
}

impl Default for Rh1Params {
    fn default() -> Self {
        Rh1Params {
            exhaustive_up_to: 60,
            subsample: 120,
            seed: 0,
        }
    }
}

/// Four-point `delta` of the glued space over `pool` (default: all vertices).
pub fn check_rh1(bow: &BowditchSpace, pool: Option<&VertexSet>, params: &Rh1Params) -> ConstantsReport {
    let all;
    let pool = match pool {
        Some(p) => p,
        None => {
            all = bow.graph.all_vertices();
            &all
        }
    };
    let (chosen, tag) = if pool.len() <= params.exhaustive_up_to {
        (pool.as_slice().to_vec(), Mode::Exhaustive.tag())
    } else {
        (
            choose(pool.as_slice(), params.subsample, params.seed, "rh1"),
            Mode::Sampled {
                count: params.subsample,
                seed: params.seed,
            }
            .tag(),
        )
    };
    let mut report = ConstantsReport::new("rh1", tag);
    let est = DistanceMatrix::new(&bow.graph, &chosen).four_point_delta(&Mode::Exhaustive);
    let best = match est.witness {
        Some(q) => Best::new(est.delta, q.to_vec(), Vec::new(), "four-point quadruple"),
        None => Best::default(),
    };
    report.set("delta", &best);
    report.set_samples("quadruples", est.samples);
    report.set_samples("vertices", chosen.len());
    if bow.coarse_map.shortcut_failures > 0 {
        report.note(format!("coarse-map-shortcut-failures:{}", bow.coarse_map.shortcut_failures));
    }
    report
}

/// Ambient vertices of the canonical geodesic in the glued space against the
/// transient set of the canonical ambient geodesic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceComparison {
    pub trace: Vec<Vertex>,
    pub transient: Vec<Vertex>,
    /// Hausdorff distance in the ambient metric.
    pub distance: f64,
}

pub fn trace_vs_transient(
    bow: &BowditchSpace,
    index: &FamilyIndex,
    x: Vertex,
    y: Vertex,
    params: &TransientParams,
) -> Result<TraceComparison, GraphError> {
    for v in [x, y] {
        if !bow.is_ambient(v) {
            return Err(GraphError::NotInAmbient(v));
        }
    }
    let trace: Vec<Vertex> = geodesic(&bow.graph, x, y)
        .vertices
        .into_iter()
        .filter(|&v| bow.is_ambient(v))
        .collect();
    let transient = transient_geodesic(&bow.ambient, index, x, y, params).into_vec();
    let local = LocalMetric::new(&bow.ambient, trace.iter().chain(&transient).copied());
    let distance = local.hausdorff(&trace, &transient);
    Ok(TraceComparison {
        trace,
        transient,
        distance,
    })
}

/// An ambient path obtained from a path of the glued space, with its
/// quasi-geodesic constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Deverticalized {
    pub path: PathInSpace,
    /// Least integer `K` with `arclength <= K d + K^2` on all subpaths.
    pub k: usize,
    pub excursions: usize,
}

/// Replaces every stretch between consecutive ambient vertices that is not a
/// single ambient edge by the canonical ambient geodesic.
pub fn devertical(bow: &BowditchSpace, path: &PathInSpace) -> Result<Deverticalized, GraphError> {
    for v in [path.start(), path.end()] {
        if !bow.is_ambient(v) {
            return Err(GraphError::NotInAmbient(v));
        }
    }
    let x = &bow.ambient;
    let stops: Vec<usize> = (0..path.len()).filter(|&i| bow.is_ambient(path.vertices[i])).collect();
    let mut out = vec![path.start()];
    let mut excursions = 0;
    for w in stops.windows(2) {
        let (u, v) = (path.vertices[w[0]], path.vertices[w[1]]);
        let direct = w[1] == w[0] + 1 && x.edge_length(u, v).is_some_and(|l| (l - (path.arclength(w[0], w[1]))).abs() <= EPS);
        if direct {
            out.push(v);
        } else {
            excursions += 1;
            out.extend(geodesic(x, u, v).vertices.into_iter().skip(1));
        }
    }
    let result = PathInSpace::from_vertices(x, out)?;
    let local = LocalMetric::new(x, result.vertices.iter().copied());
    let k = kk_constant(&result, |a, b| local.d(a, b));
    Ok(Deverticalized {
        path: result,
        k,
        excursions,
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
    fn horoball_over_path_of_three() {
        let h = build_horoball(&line(3), 2).unwrap();
        assert_eq!(h.graph.vertex_count(), 9);
        let edges = h.graph.edges();
        let vertical = edges.iter().filter(|e| e.1 - e.0 == 3).count();
        assert_eq!(vertical, 6);
        for level in 0..=2 {
            let want = (-(level as f64)).exp();
            assert!((h.graph.edge_length(h.vertex(0, level), h.vertex(1, level)).unwrap() - want).abs() < 1e-12);
        }
        assert!(build_horoball(&line(3), 0).is_err());
    }

    #[test]
    fn horoball_over_point_is_a_ray() {
        let h = build_horoball(&line(1), 5).unwrap();
        assert_eq!(h.graph.vertex_count(), 6);
        assert_eq!(h.graph.edge_count(), 5);
        assert_eq!(h.graph.distance(0, 5), 5.0);
    }

    #[test]
    fn horoball_shortcuts_long_base_paths() {
        let h = build_horoball(&line(9), 4).unwrap();
        let d = h.graph.distance(0, 8);
        assert!(d < 8.0);
        let via = (1..=4).map(|m| 2.0 * m as f64 + (-(m as f64)).exp() * 8.0).fold(f64::INFINITY, f64::min);
        assert!((d - via).abs() < 1e-9);
        let p = geodesic(&h.graph, 0, 8);
        assert!(p.vertices.iter().any(|&v| h.split(v).1 > 0));
    }

    #[test]
    fn approximation_graph_on_a_line() {
        let g = line(11);
        let a = build_approximation_graph(&g, &VertexSet::new((0..10).collect()), 3.0, 3.0).unwrap();
        assert_eq!(a.net.as_slice(), &[0, 3, 6, 9]);
        assert_eq!(a.graph.edge_count(), 3);
        let one = build_approximation_graph(&g, &VertexSet::singleton(4), 3.0, 3.0).unwrap();
        assert_eq!(one.graph.vertex_count(), 1);
        let err = build_approximation_graph(&g, &VertexSet::new(vec![0, 10]), 2.0, 2.0).unwrap_err();
        assert_eq!(err, GraphError::NetDisconnected(0, 10, 2));
    }

    #[test]
    fn empty_family_leaves_the_space_unchanged() {
        let g = line(8);
        let bow = build_bowditch(&g, &PeripheralFamily::empty(), &BowditchParams::default()).unwrap();
        assert_eq!(bow.graph.vertex_count(), 8);
        assert_eq!(bow.graph.edges(), g.edges());
        let index = FamilyIndex::new(&g, &PeripheralFamily::empty(), 1.0);
        let t = trace_vs_transient(&bow, &index, 0, 7, &TransientParams::new(1.0, 2.0)).unwrap();
        assert_eq!(t.distance, 0.0);
        let dv = devertical(&bow, &geodesic(&bow.graph, 0, 7)).unwrap();
        assert_eq!(dv.k, 1);
        assert_eq!(dv.path.vertices, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn free_group_axis_counts_and_backmap() {
        let ball = build_ball(&GroupSpec::Free(2), 4).unwrap();
        let fam = peripheral_cosets(&ball, &[CosetSpec::generated_by("a", 2).unwrap().with_representative(vec![])], 3).unwrap();
        let params = BowditchParams {
            depth: Some(4),
            ..Default::default()
        };
        let bow = build_bowditch(&ball.graph, &fam, &params).unwrap();
        let net = bow.members[0].approx.net.len();
        assert_eq!(bow.graph.vertex_count(), ball.graph.vertex_count() + net * 4);
        let top = bow.graph.vertex_count() - 1;
        match bow.back(top) {
            BowVertex::Horoball { member, level, .. } => assert_eq!((member, level), (0, 4)),
            other => panic!("{other:?}"),
        }
        assert_eq!(bow.coarse_map.shortcut_failures, 0);
        let text = bow.to_text();
        assert!(text.contains(&format!("BACKMAP {top} H:0:4 ")));
        let x = ball.vertex_of("aaaa").unwrap().unwrap();
        let y = ball.vertex_of("AAAA").unwrap().unwrap();
        assert!(bow.graph.distance(x, y) < ball.graph.distance(x, y));
        let dv = devertical(&bow, &geodesic(&bow.graph, x, y)).unwrap();
        assert_eq!(dv.path.length(), 8.0);
        assert!(dv.excursions >= 1);
    }
}
