//! Finite weighted graphs with positive edge lengths and the path types
//! used by every checker.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// Vertex identifier. Vertices of a graph with `n` vertices are `0..n`.
pub type Vertex = usize;

/// Comparison tolerance for floating-point distances.
pub const EPS: f64 = 1e-9;

/// Upper bound on the number of cached distance entries per graph.
const ROW_CACHE_ENTRIES: usize = 1 << 24;

/// Sorted, deduplicated set of vertex ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexSet(Vec<Vertex>);

impl VertexSet {
    pub fn new(mut members: Vec<Vertex>) -> Self {
        members.sort_unstable();
        members.dedup();
        VertexSet(members)
    }

    pub fn singleton(v: Vertex) -> Self {
        VertexSet(vec![v])
    }

    pub fn as_slice(&self) -> &[Vertex] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<Vertex> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &VertexSet) -> VertexSet {
        let mut all = self.0.clone();
        all.extend_from_slice(&other.0);
        VertexSet::new(all)
    }

    pub fn intersection(&self, other: &VertexSet) -> VertexSet {
        VertexSet(self.0.iter().copied().filter(|v| other.contains(*v)).collect())
    }

    /// Boolean membership mask over `0..n`.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &v in &self.0 {
            if v < n {
                m[v] = true;
            }
        }
        m
    }
}

impl FromIterator<Vertex> for VertexSet {
    fn from_iter<I: IntoIterator<Item = Vertex>>(iter: I) -> Self {
        VertexSet::new(iter.into_iter().collect())
    }
}

/// Quasi-geodesic constants `(lambda, epsilon)` carried by a path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuasiConstants {
    pub lambda: f64,
    pub epsilon: f64,
}

/// An edge path with cumulative arclength.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathInSpace {
    pub vertices: Vec<Vertex>,
    pub cumulative_length: Vec<f64>,
    pub geodesic: bool,
    pub quasi: Option<QuasiConstants>,
}

impl PathInSpace {
    /// Builds a path from a vertex sequence, computing arclength from the graph.
    pub fn from_vertices(g: &MetricGraph, vertices: Vec<Vertex>) -> Result<Self, GraphError> {
        if vertices.is_empty() {
            return Err(GraphError::EmptyPath);
        }
        let mut cum = Vec::with_capacity(vertices.len());
        cum.push(0.0);
        for w in vertices.windows(2) {
            g.check_vertex(w[0])?;
            g.check_vertex(w[1])?;
            let len = g
                .edge_length(w[0], w[1])
                .ok_or(GraphError::NotAnEdge(w[0], w[1]))?;
            cum.push(cum.last().unwrap() + len);
        }
        g.check_vertex(*vertices.last().unwrap())?;
        Ok(PathInSpace {
            vertices,
            cumulative_length: cum,
            geodesic: false,
            quasi: None,
        })
    }

    pub fn trivial(v: Vertex) -> Self {
        PathInSpace {
            vertices: vec![v],
            cumulative_length: vec![0.0],
            geodesic: true,
            quasi: None,
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn start(&self) -> Vertex {
        self.vertices[0]
    }

    pub fn end(&self) -> Vertex {
        *self.vertices.last().unwrap()
    }

    pub fn length(&self) -> f64 {
        *self.cumulative_length.last().unwrap_or(&0.0)
    }

    /// Arclength between positions `i` and `j`.
    pub fn arclength(&self, i: usize, j: usize) -> f64 {
        (self.cumulative_length[j] - self.cumulative_length[i]).abs()
    }

    pub fn vertex_set(&self) -> VertexSet {
        self.vertices.iter().copied().collect()
    }

    /// Concatenates `other` onto `self`; `other` must start where `self` ends.
    pub fn concat(&self, other: &PathInSpace) -> Result<PathInSpace, GraphError> {
        if self.end() != other.start() {
            return Err(GraphError::Discontinuous(self.end(), other.start()));
        }
        let offset = self.length();
        let mut vertices = self.vertices.clone();
        let mut cum = self.cumulative_length.clone();
        for (v, c) in other.vertices.iter().zip(&other.cumulative_length).skip(1) {
            vertices.push(*v);
            cum.push(offset + c);
        }
        Ok(PathInSpace {
            vertices,
            cumulative_length: cum,
            geodesic: false,
            quasi: None,
        })
    }

    /// Sub-path between positions `i <= j`, inclusive.
    pub fn subpath(&self, i: usize, j: usize) -> PathInSpace {
        let base = self.cumulative_length[i];
        PathInSpace {
            vertices: self.vertices[i..=j].to_vec(),
            cumulative_length: self.cumulative_length[i..=j].iter().map(|c| c - base).collect(),
            geodesic: self.geodesic,
            quasi: self.quasi,
        }
    }

    pub fn reversed(&self) -> PathInSpace {
        let total = self.length();
        PathInSpace {
            vertices: self.vertices.iter().rev().copied().collect(),
            cumulative_length: self.cumulative_length.iter().rev().map(|c| total - c).collect(),
            geodesic: self.geodesic,
            quasi: self.quasi,
        }
    }
}

/// Finite connected weighted graph; immutable after construction.
pub struct MetricGraph {
    adj: Vec<Vec<(Vertex, f64)>>,
    edge_count: usize,
    labels: Option<Vec<String>>,
    unit: bool,
    max_edge: f64,
    min_edge: f64,
    rows: RowCache,
}

impl Clone for MetricGraph {
    fn clone(&self) -> Self {
        MetricGraph {
            adj: self.adj.clone(),
            edge_count: self.edge_count,
            labels: self.labels.clone(),
            unit: self.unit,
            max_edge: self.max_edge,
            min_edge: self.min_edge,
            rows: RowCache::default(),
        }
    }
}

impl fmt::Debug for MetricGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricGraph")
            .field("vertices", &self.vertex_count())
            .field("edges", &self.edge_count)
            .finish()
    }
}

#[derive(Default)]
struct RowCache {
    rows: RwLock<HashMap<Vertex, Arc<[f64]>>>,
}

/// Accumulates edges before validation.
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    n: usize,
    edges: HashMap<(Vertex, Vertex), f64>,
    labels: Option<Vec<String>>,
}

impl GraphBuilder {
    pub fn new(n: usize) -> Self {
        GraphBuilder {
            n,
            edges: HashMap::new(),
            labels: None,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    /// Appends a fresh vertex and returns its id.
    pub fn add_vertex(&mut self) -> Vertex {
        self.n += 1;
        if let Some(l) = self.labels.as_mut() {
            l.push(String::new());
        }
        self.n - 1
    }

    /// Adds an undirected edge. A repeated pair keeps the shorter length.
    pub fn add_edge(&mut self, u: Vertex, v: Vertex, length: f64) -> Result<(), GraphError> {
        if u >= self.n {
            return Err(GraphError::InvalidVertex(u, self.n));
        }
        if v >= self.n {
            return Err(GraphError::InvalidVertex(v, self.n));
        }
        if u == v {
            return Err(GraphError::SelfLoop(u));
        }
        if length <= 0.0 || !length.is_finite() {
            return Err(GraphError::NonPositiveLength(u, v, length));
        }
        let key = (u.min(v), u.max(v));
        let entry = self.edges.entry(key).or_insert(length);
        if length < *entry {
            *entry = length;
        }
        Ok(())
    }

    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        self.edges.contains_key(&(u.min(v), u.max(v)))
    }

    pub fn set_labels(&mut self, labels: Vec<String>) {
        self.labels = Some(labels);
    }

    pub fn set_label(&mut self, v: Vertex, label: String) {
        let n = self.n;
        let labels = self.labels.get_or_insert_with(|| vec![String::new(); n]);
        labels[v] = label;
    }

    /// Validates connectivity and freezes the graph.
    pub fn build(self) -> Result<MetricGraph, GraphError> {
        let mut adj = vec![Vec::new(); self.n];
        let mut unit = true;
        let mut max_edge: f64 = 0.0;
        let mut min_edge = f64::INFINITY;
        for (&(u, v), &len) in &self.edges {
            adj[u].push((v, len));
            adj[v].push((u, len));
            unit &= (len - 1.0).abs() < EPS;
            max_edge = max_edge.max(len);
            min_edge = min_edge.min(len);
        }
        for list in &mut adj {
            list.sort_by_key(|&(w, _)| w);
        }
        if let Some(labels) = &self.labels {
            if labels.len() != self.n {
                return Err(GraphError::LabelCount(labels.len(), self.n));
            }
        }
        let g = MetricGraph {
            adj,
            edge_count: self.edges.len(),
            labels: self.labels,
            unit,
            max_edge,
            min_edge: if min_edge.is_finite() { min_edge } else { 1.0 },
            rows: RowCache::default(),
        };
        if let Some(v) = g.first_unreachable() {
            return Err(GraphError::Disconnected(v));
        }
        Ok(g)
    }
}

impl MetricGraph {
    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// Largest edge length; the additive slack used in containment checks.
    pub fn max_edge_length(&self) -> f64 {
        self.max_edge
    }

    pub fn min_edge_length(&self) -> f64 {
        self.min_edge
    }

    pub fn is_unit(&self) -> bool {
        self.unit
    }

    pub fn neighbors(&self, v: Vertex) -> &[(Vertex, f64)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v].len()
    }

    pub fn edge_length(&self, u: Vertex, v: Vertex) -> Option<f64> {
        let list = self.adj.get(u)?;
        list.binary_search_by_key(&v, |&(w, _)| w)
            .ok()
            .map(|i| list[i].1)
    }

    /// Edges as `(u, v, length)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(Vertex, Vertex, f64)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (u, list) in self.adj.iter().enumerate() {
            for &(v, len) in list {
                if u < v {
                    out.push((u, v, len));
                }
            }
        }
        out
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, v: Vertex) -> Option<&str> {
        self.labels.as_ref().map(|l| l[v].as_str())
    }

    /// Finds the vertex whose label equals `label`.
    pub fn vertex_by_label(&self, label: &str) -> Option<Vertex> {
        self.labels.as_ref()?.iter().position(|l| l == label)
    }

    pub fn check_vertex(&self, v: Vertex) -> Result<(), GraphError> {
        if v < self.vertex_count() {
            Ok(())
        } else {
            Err(GraphError::InvalidVertex(v, self.vertex_count()))
        }
    }

    pub fn all_vertices(&self) -> VertexSet {
        VertexSet((0..self.vertex_count()).collect())
    }

    fn first_unreachable(&self) -> Option<Vertex> {
        if self.adj.is_empty() {
            return None;
        }
        let mut seen = vec![false; self.adj.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &(w, _) in &self.adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    /// Distances from `source` to every vertex, cached up to a memory budget.
    pub fn distances_from(&self, source: Vertex) -> Arc<[f64]> {
        if let Some(row) = self.rows.rows.read().unwrap().get(&source) {
            return row.clone();
        }
        let row: Arc<[f64]> = crate::shortest::single_source(self, source, None).into();
        let mut cache = self.rows.rows.write().unwrap();
        if (cache.len() + 1) * self.vertex_count() <= ROW_CACHE_ENTRIES {
            cache.insert(source, row.clone());
        }
        row
    }

    fn cached_row(&self, v: Vertex) -> Option<Arc<[f64]>> {
        self.rows.rows.read().unwrap().get(&v).cloned()
    }

    /// Graph distance; uses cached rows when available, else an early-exit search.
    pub fn distance(&self, u: Vertex, v: Vertex) -> f64 {
        if u == v {
            return 0.0;
        }
        if let Some(row) = self.cached_row(u) {
            return row[v];
        }
        if let Some(row) = self.cached_row(v) {
            return row[u];
        }
        crate::shortest::point_distance(self, u, v, None)
    }

    /// Distance from `v` to the nearest member of `targets` (a mask over vertices).
    pub fn distance_to_mask(&self, v: Vertex, targets: &[bool]) -> f64 {
        if targets[v] {
            return 0.0;
        }
        crate::shortest::distance_to_mask(self, v, targets)
    }

    pub fn diameter(&self) -> f64 {
        (0..self.vertex_count())
            .map(|v| {
                crate::shortest::single_source(self, v, None)
                    .iter()
                    .copied()
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

impl MetricGraph {
    /// Text form: `V <count>`, one `E <u> <v> <length>` per edge, then
    /// `L <v> <label>` when labels are present.
    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = format!("V {}\n", self.vertex_count());
        for (u, v, len) in self.edges() {
            writeln!(out, "E {u} {v} {len}").unwrap();
        }
        if let Some(labels) = &self.labels {
            for (v, l) in labels.iter().enumerate() {
                writeln!(out, "L {v} {l}").unwrap();
            }
        }
        out
    }

    /// Parses the text form; `#` starts a comment line.
    pub fn from_text(text: &str) -> Result<MetricGraph, GraphError> {
        let mut builder: Option<GraphBuilder> = None;
        let mut labels: Option<Vec<String>> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (tag, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            let num = |t: Option<&str>, what: &str| -> Result<usize, GraphError> {
                t.and_then(|t| t.parse().ok())
                    .ok_or_else(|| GraphError::parse(i + 1, format!("missing or bad {what}")))
            };
            match tag {
                "V" => {
                    if builder.is_some() {
                        return Err(GraphError::parse(i + 1, "duplicate V header"));
                    }
                    builder = Some(GraphBuilder::new(num(Some(rest), "vertex count")?));
                }
                "E" => {
                    let b = builder.as_mut().ok_or_else(|| GraphError::parse(i + 1, "E before V"))?;
                    let mut it = rest.split_whitespace();
                    let u = num(it.next(), "vertex")?;
                    let v = num(it.next(), "vertex")?;
                    let len: f64 = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| GraphError::parse(i + 1, "missing or bad length"))?;
                    b.add_edge(u, v, len).map_err(|e| GraphError::parse(i + 1, e.to_string()))?;
                }
                "L" => {
                    let b = builder.as_ref().ok_or_else(|| GraphError::parse(i + 1, "L before V"))?;
                    let (v, label) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                    let v = num(Some(v), "vertex")?;
                    if v >= b.vertex_count() {
                        return Err(GraphError::parse(i + 1, format!("vertex {v} out of range")));
                    }
                    labels.get_or_insert_with(|| vec![String::new(); b.vertex_count()])[v] = label.trim().to_string();
                }
                _ => return Err(GraphError::parse(i + 1, format!("unknown record `{tag}`"))),
            }
        }
        let mut b = builder.ok_or_else(|| GraphError::parse(1, "missing V header"))?;
        if let Some(l) = labels {
            b.set_labels(l);
        }
        b.build()
    }
}
