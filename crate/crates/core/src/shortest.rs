//! Shortest-path engine: BFS on unit graphs, Dijkstra otherwise.
//!
//! Canonical geodesics break ties by walking back from the target and always
//! stepping to the least-id predecessor, so a path depends only on the
//! distance values and never on the search order.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::GraphError;
use crate::graph::{MetricGraph, PathInSpace, Vertex, VertexSet, EPS};

#[derive(Copy, Clone, PartialEq)]
struct HeapItem(f64, Vertex);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable per-thread search state with lazy reset.
struct Scratch {
    dist: Vec<f64>,
    settled: Vec<bool>,
    touched: Vec<Vertex>,
}

impl Scratch {
    fn prepare(&mut self, n: usize) {
        for &v in &self.touched {
            if v < self.dist.len() {
                self.dist[v] = f64::INFINITY;
                self.settled[v] = false;
            }
        }
        self.touched.clear();
        if self.dist.len() < n {
            self.dist.resize(n, f64::INFINITY);
            self.settled.resize(n, false);
        }
    }

    fn relax(&mut self, v: Vertex, d: f64) -> bool {
        if d < self.dist[v] {
            if self.dist[v].is_infinite() {
                self.touched.push(v);
            }
            self.dist[v] = d;
            true
        } else {
            false
        }
    }
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = const { RefCell::new(Scratch {
        dist: Vec::new(),
        settled: Vec::new(),
        touched: Vec::new(),
    }) };
}

/// Outcome of an early-exit search.
enum Stop {
    Never,
    Vertex(Vertex),
    Mask,
    Radius(f64),
}

/// Runs a search from `sources`, calling `visit(v, d)` as each vertex settles.
/// `visit` returning `true` stops the search.
fn search<F>(
    g: &MetricGraph,
    sources: &[Vertex],
    forbidden: Option<&[bool]>,
    stop: Stop,
    targets: Option<&[bool]>,
    mut visit: F,
) where
    F: FnMut(Vertex, f64, &[f64]) -> bool,
{
    let n = g.vertex_count();
    SCRATCH.with(|cell| {
        let mut s = cell.borrow_mut();
        s.prepare(n);
        let limit = match stop {
            Stop::Radius(r) => r + EPS,
            _ => f64::INFINITY,
        };
        if g.is_unit() {
            let mut queue = VecDeque::new();
            for &src in sources {
                if forbidden.is_some_and(|f| f[src]) {
                    continue;
                }
                if s.relax(src, 0.0) {
                    queue.push_back(src);
                }
            }
            while let Some(u) = queue.pop_front() {
                let du = s.dist[u];
                s.settled[u] = true;
                if visit(u, du, &s.dist) {
                    return;
                }
                match stop {
                    Stop::Vertex(t) if t == u => return,
                    Stop::Mask if targets.is_some_and(|m| m[u]) => return,
                    _ => {}
                }
                if du + 1.0 > limit {
                    continue;
                }
                for &(w, _) in g.neighbors(u) {
                    if forbidden.is_some_and(|f| f[w]) {
                        continue;
                    }
                    if s.relax(w, du + 1.0) {
                        queue.push_back(w);
                    }
                }
            }
        } else {
            let mut heap = BinaryHeap::new();
            for &src in sources {
                if forbidden.is_some_and(|f| f[src]) {
                    continue;
                }
                if s.relax(src, 0.0) {
                    heap.push(HeapItem(0.0, src));
                }
            }
            while let Some(HeapItem(du, u)) = heap.pop() {
                if s.settled[u] || du > s.dist[u] {
                    continue;
                }
                s.settled[u] = true;
                if visit(u, du, &s.dist) {
                    return;
                }
                match stop {
                    Stop::Vertex(t) if t == u => return,
                    Stop::Mask if targets.is_some_and(|m| m[u]) => return,
                    _ => {}
                }
                for &(w, len) in g.neighbors(u) {
                    if forbidden.is_some_and(|f| f[w]) {
                        continue;
                    }
                    let nd = du + len;
                    if nd > limit {
                        continue;
                    }
                    if s.relax(w, nd) {
                        heap.push(HeapItem(nd, w));
                    }
                }
            }
        }
    });
}

/// Full distance row from `source`; unreachable vertices are infinite.
pub fn single_source(g: &MetricGraph, source: Vertex, forbidden: Option<&[bool]>) -> Vec<f64> {
    let mut row = vec![f64::INFINITY; g.vertex_count()];
    search(g, &[source], forbidden, Stop::Never, None, |v, d, _| {
        row[v] = d;
        false
    });
    row
}

/// Multi-source distances, truncated at `radius` (farther vertices are infinite).
pub fn multi_source(g: &MetricGraph, sources: &[Vertex], radius: f64) -> Vec<(Vertex, f64)> {
    let mut out = Vec::new();
    search(g, sources, None, Stop::Radius(radius), None, |v, d, _| {
        if d <= radius + EPS {
            out.push((v, d));
        }
        false
    });
    out
}

/// Full multi-source distance row (distance to the set) for every vertex.
pub fn distance_to_set_row(g: &MetricGraph, sources: &[Vertex]) -> Vec<f64> {
    let mut row = vec![f64::INFINITY; g.vertex_count()];
    search(g, sources, None, Stop::Never, None, |v, d, _| {
        row[v] = d;
        false
    });
    row
}

pub(crate) fn point_distance(
    g: &MetricGraph,
    u: Vertex,
    v: Vertex,
    forbidden: Option<&[bool]>,
) -> f64 {
    let mut out = f64::INFINITY;
    search(g, &[u], forbidden, Stop::Vertex(v), None, |w, d, _| {
        if w == v {
            out = d;
        }
        false
    });
    out
}

pub(crate) fn distance_to_mask(g: &MetricGraph, v: Vertex, targets: &[bool]) -> f64 {
    let mut out = f64::INFINITY;
    search(g, &[v], None, Stop::Mask, Some(targets), |w, d, _| {
        if targets[w] {
            out = d;
        }
        false
    });
    out
}

/// Least-id predecessor walk from `target` back to a source at distance 0.
fn walk_back(g: &MetricGraph, target: Vertex, dist: &dyn Fn(Vertex) -> f64) -> Vec<Vertex> {
    walk_back_by(g, target, dist, false)
}

fn walk_back_by(g: &MetricGraph, target: Vertex, dist: &dyn Fn(Vertex) -> f64, greatest: bool) -> Vec<Vertex> {
    let mut rev = vec![target];
    let mut cur = target;
    while dist(cur) > EPS {
        let dc = dist(cur);
        let tol = EPS * (1.0 + dc);
        let mut tight = g.neighbors(cur).iter().filter(|&&(w, len)| {
            let dw = dist(w);
            dw.is_finite() && dw < dc && (dw + len - dc).abs() <= tol
        });
        let pred = if greatest { tight.last() } else { tight.next() }
            .map(|&(w, _)| w)
            .expect("distance labels admit a predecessor");
        rev.push(pred);
        cur = pred;
    }
    rev.reverse();
    rev
}

/// Canonical shortest path from `u` to `v` avoiding `forbidden`.
///
/// Returns `Ok(None)` when `v` is unreachable. Ties are broken by the
/// lexicographically least predecessor id, walking back from `v`.
pub fn shortest_path(
    g: &MetricGraph,
    u: Vertex,
    v: Vertex,
    forbidden: Option<&VertexSet>,
) -> Result<Option<PathInSpace>, GraphError> {
    g.check_vertex(u)?;
    g.check_vertex(v)?;
    if let Some(f) = forbidden {
        if f.contains(u) {
            return Err(GraphError::Forbidden(u));
        }
        if f.contains(v) {
            return Err(GraphError::Forbidden(v));
        }
    }
    let mask = forbidden.map(|f| f.mask(g.vertex_count()));
    Ok(shortest_path_masked(g, u, v, mask.as_deref()))
}

pub(crate) fn shortest_path_masked(
    g: &MetricGraph,
    u: Vertex,
    v: Vertex,
    forbidden: Option<&[bool]>,
) -> Option<PathInSpace> {
    if u == v {
        return Some(PathInSpace::trivial(u));
    }
    let mut vertices = None;
    search(g, &[u], forbidden, Stop::Vertex(v), None, |w, _, dist| {
        if w == v {
            // Every predecessor of v has strictly smaller distance and has
            // therefore been settled; unsettled entries are at least dist[v].
            vertices = Some(walk_back(g, v, &|x| dist[x]));
            true
        } else {
            false
        }
    });
    let vertices = vertices?;
    let mut path = PathInSpace::from_vertices(g, vertices).expect("walk follows edges");
    path.geodesic = true;
    Some(path)
}

/// Canonical geodesic using a full distance row from `u` (cached when possible).
pub fn geodesic(g: &MetricGraph, u: Vertex, v: Vertex) -> PathInSpace {
    if u == v {
        return PathInSpace::trivial(u);
    }
    shortest_path_masked(g, u, v, None).expect("connected graph")
}

/// Geodesics used as triangle sides: least- and greatest-id predecessor walks
/// in both directions, deduplicated, canonical first.
pub fn side_geodesics(g: &MetricGraph, u: Vertex, v: Vertex) -> Vec<PathInSpace> {
    if u == v {
        return vec![PathInSpace::trivial(u)];
    }
    let (du, dv) = (g.distances_from(u), g.distances_from(v));
    let mut out: Vec<PathInSpace> = Vec::with_capacity(4);
    for (row, flip, greatest) in [(&du, false, false), (&du, false, true), (&dv, true, false), (&dv, true, true)] {
        let t = if flip { u } else { v };
        let mut vertices = walk_back_by(g, t, &|x| row[x], greatest);
        if flip {
            vertices.reverse();
        }
        if out.iter().all(|p| p.vertices != vertices) {
            let mut p = PathInSpace::from_vertices(g, vertices).expect("walk follows edges");
            p.geodesic = true;
            out.push(p);
        }
    }
    out
}

/// Distance to the nearest source and the least-id source attaining it, for
/// every vertex.
pub fn nearest_source_labels(g: &MetricGraph, sources: &[Vertex]) -> (Vec<f64>, Vec<Vertex>) {
    let n = g.vertex_count();
    let mut order = Vec::with_capacity(n);
    let mut dist = vec![f64::INFINITY; n];
    search(g, sources, None, Stop::Never, None, |v, d, _| {
        dist[v] = d;
        order.push(v);
        false
    });
    let mut label = vec![usize::MAX; n];
    for &s in sources {
        label[s] = label[s].min(s);
    }
    for &v in &order {
        if dist[v] <= EPS {
            continue;
        }
        let tol = EPS * (1.0 + dist[v]);
        let mut best = usize::MAX;
        for &(u, len) in g.neighbors(v) {
            if dist[u] < dist[v] && (dist[u] + len - dist[v]).abs() <= tol {
                best = best.min(label[u]);
            }
        }
        label[v] = best;
    }
    (dist, label)
}

/// The canonical geodesic from `x` to `y` followed by up to `extra` detours
/// through midpoints `m` adjacent to it with `d(x,m) + d(m,y) <= d(x,y) + slack`.
/// Midpoints are drawn deterministically from `seed`.
pub fn geodesic_family(
    g: &MetricGraph,
    x: Vertex,
    y: Vertex,
    extra: usize,
    slack: f64,
    seed: u64,
) -> Vec<PathInSpace> {
    let canonical = geodesic(g, x, y);
    if extra == 0 || x == y {
        return vec![canonical];
    }
    let dx = single_source(g, x, None);
    let dy = single_source(g, y, None);
    let total = dx[y];
    let on_path = canonical.vertex_set();
    let mut candidates: Vec<Vertex> = canonical
        .vertices
        .iter()
        .flat_map(|&v| g.neighbors(v).iter().map(|&(w, _)| w))
        .filter(|&m| !on_path.contains(m) && dx[m] + dy[m] <= total + slack + EPS)
        .collect();
    candidates.sort_unstable();
    candidates.dedup();
    let stream = seed ^ (x as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (y as u64).rotate_left(32);
    let chosen = crate::sampling::choose(&candidates, extra, stream, "geodesic-family");
    let mut out = vec![canonical];
    for m in chosen {
        let p = geodesic(g, x, m)
            .concat(&geodesic(g, m, y))
            .expect("paths meet at the midpoint");
        out.push(p);
    }
    out
}
