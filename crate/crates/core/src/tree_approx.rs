//! Transient hulls of finite configurations and their approximation by
//! tree-graded graphs: a tree realized from the landmark metric with each
//! peripheral member collapsed, then expanded back into member pieces.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bowditch::build_approximation_graph;
use crate::error::GraphError;
use crate::graph::{GraphBuilder, MetricGraph, Vertex, VertexSet, EPS};
use crate::metric::{four_point_defect, maximal_net, DistanceMatrix};
use crate::peripherals::{project, PeripheralFamily};
use crate::report::{Best, Witness};
use crate::shortest::{distance_to_set_row, geodesic};
use crate::transient::{decompose_indexed, FamilyIndex, TransientParams};

/// Points and peripheral members whose hull is approximated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    pub points: Vec<Vertex>,
    pub members: Vec<usize>,
}

impl Configuration {
    pub fn new(points: Vec<Vertex>, members: Vec<usize>) -> Self {
        Configuration { points, members }
    }

    pub fn len(&self) -> usize {
        self.points.len() + self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self, g: &MetricGraph, fam: &PeripheralFamily) -> Result<(), GraphError> {
        if self.is_empty() {
            return Err(GraphError::EmptySet);
        }
        for &v in &self.points {
            g.check_vertex(v)?;
        }
        for &m in &self.members {
            if m >= fam.len() {
                return Err(GraphError::InvalidParameter(format!("member index {m} out of range")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub transient: TransientParams,
    /// Net spacing for representative points of configuration members.
    pub net_k: f64,
    /// Approximation graph parameters of the pieces.
    pub piece_k: f64,
    pub piece_r: f64,
    pub n_max: usize,
    /// Largest tolerated gap between tree and landmark distances.
    pub tolerance: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            transient: TransientParams::new(1.0, 2.0),
            net_k: 2.0,
            piece_k: 1.0,
            piece_r: 1.0,
            n_max: 6,
            tolerance: 3.0,
        }
    }
}

/// Hull vertices and the members met by deep components of hull geodesics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hull {
    pub vertices: VertexSet,
    pub deep_members: Vec<usize>,
}

pub fn hull_detail(g: &MetricGraph, fam: &PeripheralFamily, conf: &Configuration, params: &TreeParams) -> Result<Hull, GraphError> {
    conf.validate(g, fam)?;
    let mut reps: Vec<Vertex> = conf.points.clone();
    for &m in &conf.members {
        reps.extend(maximal_net(g, &fam.members[m], params.net_k).iter());
    }
    let reps: Vec<Vertex> = reps.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    let index = FamilyIndex::new(g, fam, params.transient.mu);
    let parts: Vec<(Vec<Vertex>, Vec<usize>)> = (0..reps.len())
        .into_par_iter()
        .flat_map_iter(|i| (i + 1..reps.len()).map(move |j| (i, j)))
        .map(|(i, j)| {
            let dec = decompose_indexed(g, &index, &geodesic(g, reps[i], reps[j]), &params.transient);
            (
                dec.transient_vertices().into_vec(),
                dec.deep_components.iter().map(|c| c.member).collect(),
            )
        })
        .collect();
    let mut vertices: BTreeSet<Vertex> = reps.iter().copied().collect();
    let mut deep = BTreeSet::new();
    for (vs, ms) in parts {
        vertices.extend(vs);
        deep.extend(ms);
    }
    for &m in &conf.members {
        vertices.extend(fam.members[m].iter());
    }
    Ok(Hull {
        vertices: VertexSet::new(vertices.into_iter().collect()),
        deep_members: deep.into_iter().collect(),
    })
}

/// Configuration points, configuration members and the transient sets of
/// canonical geodesics between all representative points.
pub fn transient_hull(
    g: &MetricGraph,
    fam: &PeripheralFamily,
    conf: &Configuration,
    params: &TreeParams,
) -> Result<VertexSet, GraphError> {
    Ok(hull_detail(g, fam, conf, params)?.vertices)
}

/// A piece of a tree-graded graph with the member it copies, if known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreePiece {
    pub vertices: VertexSet,
    pub member: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct TreeGradedSpace {
    pub graph: MetricGraph,
    pub pieces: Vec<TreePiece>,
}

impl TreeGradedSpace {
    /// Graph text followed by one `PIECE <index> <v...>` line per piece.
    pub fn to_text(&self) -> String {
        let mut s = self.graph.to_text();
        for (i, p) in self.pieces.iter().enumerate() {
            write!(s, "PIECE {i}").unwrap();
            for v in p.vertices.iter() {
                write!(s, " {v}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<TreeGradedSpace, GraphError> {
        let mut graph_text = String::new();
        let mut pieces = Vec::new();
        let mut lines = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim_start().starts_with("PIECE") {
                lines.push((i + 1, line.trim()));
                graph_text.push('\n');
            } else {
                graph_text.push_str(line);
                graph_text.push('\n');
            }
        }
        let graph = MetricGraph::from_text(&graph_text)?;
        for (line, rec) in lines {
            let nums: Vec<usize> = rec
                .split_whitespace()
                .skip(1)
                .map(|t| t.parse().map_err(|_| GraphError::parse(line, format!("bad number {t:?}"))))
                .collect::<Result<_, _>>()?;
            if nums.first() != Some(&pieces.len()) {
                return Err(GraphError::parse(line, "piece indices must be 0, 1, 2, ... in order"));
            }
            for &v in &nums[1..] {
                graph.check_vertex(v).map_err(|e| GraphError::parse(line, e.to_string()))?;
            }
            pieces.push(TreePiece {
                vertices: VertexSet::new(nums[1..].to_vec()),
                member: None,
            });
        }
        Ok(TreeGradedSpace { graph, pieces })
    }
}

/// Outcome of the tree-graded axioms check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "kebab-case")]
pub enum TreeCheck {
    Pass,
    /// Two pieces share more than one vertex.
    T1 { pieces: (usize, usize), shared: Vec<Vertex> },
    /// A fundamental cycle not contained in any piece.
    T2 { cycle: Vec<Vertex> },
}

/// Checks piece intersections pairwise and every fundamental cycle of a
/// breadth-first spanning tree.
pub fn verify_tree_graded(t: &TreeGradedSpace) -> TreeCheck {
    for i in 0..t.pieces.len() {
        for j in i + 1..t.pieces.len() {
            let shared = t.pieces[i].vertices.intersection(&t.pieces[j].vertices);
            if shared.len() > 1 {
                return TreeCheck::T1 {
                    pieces: (i, j),
                    shared: shared.into_vec(),
                };
            }
        }
    }
    let g = &t.graph;
    let n = g.vertex_count();
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![0usize; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(u) = queue.pop_front() {
        for &(w, _) in g.neighbors(u) {
            if !seen[w] {
                seen[w] = true;
                parent[w] = u;
                depth[w] = depth[u] + 1;
                queue.push_back(w);
            }
        }
    }
    for (u, v, _) in g.edges() {
        if parent[u] == v || parent[v] == u {
            continue;
        }
        let (mut a, mut b) = (u, v);
        let (mut left, mut right) = (vec![a], vec![b]);
        while a != b {
            if depth[a] >= depth[b] {
                a = parent[a];
                left.push(a);
            } else {
                b = parent[b];
                right.push(b);
            }
        }
        right.pop();
        left.extend(right.into_iter().rev());
        if !t.pieces.iter().any(|p| left.iter().all(|&x| p.vertices.contains(x))) {
            return TreeCheck::T2 { cycle: left };
        }
    }
    TreeCheck::Pass
}

/// Distortion of the hull map into the tree-graded graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    /// `(hull vertex, tree-graded vertex)`.
    pub map: Vec<(Vertex, Vertex)>,
    /// Least integer `C >= 1` with `d/C - C <= d_T <= C d + C` on all hull pairs.
    pub c_mul: usize,
    /// Additive slack needed at `c_mul`.
    pub c_add: f64,
    pub realization_error: f64,
    pub pairs: usize,
    pub witnesses: Vec<Witness>,
}

/// Rooted tree under construction: node 0 is the root.
struct InsertionTree {
    parent: Vec<usize>,
    depth: Vec<f64>,
    /// Landmark or marker realized at each node.
    owner: Vec<Option<usize>>,
}

impl InsertionTree {
    fn add(&mut self, parent: usize, depth: f64, owner: Option<usize>) -> usize {
        self.parent.push(parent);
        self.depth.push(depth);
        self.owner.push(owner);
        self.parent.len() - 1
    }

    fn distance(&self, a: usize, b: usize) -> f64 {
        let (mut x, mut y) = (a, b);
        while x != y {
            if self.depth[x] >= self.depth[y] {
                x = self.parent[x];
            } else {
                y = self.parent[y];
            }
        }
        self.depth[a] + self.depth[b] - 2.0 * self.depth[x]
    }

    /// Node at distance `t` from the root on the way to `y`, splitting an
    /// edge when needed.
    fn point_towards(&mut self, y: usize, t: f64) -> usize {
        let mut below = y;
        let mut at = y;
        while self.depth[at] > t + EPS {
            below = at;
            at = self.parent[at];
        }
        if (self.depth[at] - t).abs() <= EPS || below == at {
            return at;
        }
        let s = self.add(at, t, None);
        self.parent[below] = s;
        s
    }
}

/// Builds a tree from a metric by inserting points in order, each attached
/// at its Gromov product with the best earlier point. Returns the tree and
/// the node of every point.
fn realize_tree(d: &[Vec<f64>]) -> (InsertionTree, Vec<usize>) {
    let n = d.len();
    let mut tree = InsertionTree {
        parent: vec![0],
        depth: vec![0.0],
        owner: vec![Some(0)],
    };
    let mut node = vec![0usize; n];
    for x in 1..n {
        let mut best = (0usize, 0.0f64);
        for y in 1..x {
            let gp = (d[0][x] + d[0][y] - d[x][y]) / 2.0;
            if gp > best.1 + EPS {
                best = (y, gp);
            }
        }
        let y = best.0;
        let t = best.1.clamp(0.0, d[0][x].min(tree.depth[node[y]]));
        let p = tree.point_towards(node[y], t);
        let len = d[0][x] - t;
        node[x] = if len > EPS {
            tree.add(p, t + len, Some(x))
        } else if tree.owner[p].is_none() {
            tree.owner[p] = Some(x);
            p
        } else {
            tree.add(p, tree.depth[p] + d[x][tree.owner[p].unwrap()].max(EPS), Some(x))
        };
    }
    (tree, node)
}

/// Tree-graded approximation of the hull of `conf`.
pub fn build_tree_graded_approx(
    g: &MetricGraph,
    fam: &PeripheralFamily,
    conf: &Configuration,
    params: &TreeParams,
) -> Result<(TreeGradedSpace, EmbeddingReport), GraphError> {
    if conf.len() > params.n_max {
        return Err(GraphError::InvalidParameter(format!("configuration of size {} exceeds {}", conf.len(), params.n_max)));
    }
    let hull = hull_detail(g, fam, conf, params)?;
    let piece_members: Vec<usize> = conf
        .members
        .iter()
        .chain(&hull.deep_members)
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = g.vertex_count();
    let mut piece_of = vec![usize::MAX; n];
    for (i, &m) in piece_members.iter().enumerate() {
        for v in fam.members[m].iter() {
            if piece_of[v] != usize::MAX {
                return Err(GraphError::InvalidParameter(format!("members {} and {m} intersect", piece_members[piece_of[v]])));
            }
            piece_of[v] = i;
        }
    }
    let landmarks: Vec<Vertex> = hull.vertices.iter().filter(|&v| piece_of[v] == usize::MAX).collect();
    let (nl, np) = (landmarks.len(), piece_members.len());
    let rows: Vec<Vec<f64>> = piece_members
        .par_iter()
        .map(|&m| distance_to_set_row(g, fam.members[m].as_slice()))
        .collect();
    let dl = DistanceMatrix::new(g, &landmarks);
    let size = nl + np;
    let mut d = vec![vec![0.0; size]; size];
    for i in 0..nl {
        for (j, x) in d[i][..nl].iter_mut().enumerate() {
            *x = dl.get(i, j);
        }
        for p in 0..np {
            d[i][nl + p] = rows[p][landmarks[i]];
            d[nl + p][i] = rows[p][landmarks[i]];
        }
    }
    for p in 0..np {
        for q in 0..np {
            if p != q {
                d[nl + p][nl + q] = fam.members[piece_members[q]].iter().map(|v| rows[p][v]).fold(f64::INFINITY, f64::min);
            }
        }
    }
    for k in 0..size {
        for i in 0..size {
            for j in 0..size {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    let (tree, node) = realize_tree(&d);
    let mut worst = (0.0f64, 0usize, 0usize);
    for i in 0..size {
        for j in i + 1..size {
            let e = (tree.distance(node[i], node[j]) - d[i][j]).abs();
            if e > worst.0 + EPS {
                worst = (e, i, j);
            }
        }
    }
    let point_of = |i: usize| if i < nl { landmarks[i] } else { fam.members[piece_members[i - nl]].as_slice()[0] };
    if worst.0 > params.tolerance + EPS {
        let (_, a, b) = worst;
        let mut quad = (f64::NEG_INFINITY, a, b);
        for c in 0..size {
            for e in c + 1..size {
                let f = four_point_defect(d[a][b], d[c][e], d[a][c], d[b][e], d[a][e], d[b][c]);
                if f > quad.0 + EPS {
                    quad = (f, c, e);
                }
            }
        }
        return Err(GraphError::NotTreeLike(worst.0, [point_of(a), point_of(b), point_of(quad.1), point_of(quad.2)]));
    }

    let pieces_approx = piece_members
        .iter()
        .map(|&m| build_approximation_graph(g, &fam.members[m], params.piece_k, params.piece_r))
        .collect::<Result<Vec<_>, _>>()?;
    let tn = tree.parent.len();
    let is_marker = |t: usize| tree.owner[t].is_some_and(|o| o >= nl);
    let mut tid = vec![usize::MAX; tn];
    let mut next = 0;
    for (t, id) in tid.iter_mut().enumerate() {
        if !is_marker(t) {
            *id = next;
            next += 1;
        }
    }
    let mut piece_base = Vec::with_capacity(np);
    for a in &pieces_approx {
        piece_base.push(next);
        next += a.net.len();
    }
    let mut adj = vec![Vec::new(); tn];
    for t in 1..tn {
        adj[t].push(tree.parent[t]);
        adj[tree.parent[t]].push(t);
    }
    let net_position = |p: usize, v: Vertex| -> usize {
        let net = &pieces_approx[p].net;
        let target = if net.contains(v) { v } else { project(g, v, net).expect("nonempty net") };
        piece_base[p] + net.as_slice().binary_search(&target).expect("net point")
    };
    // Piece vertex where the branch through `w` (away from marker node `m`) attaches.
    let attach = |m: usize, w: usize| -> usize {
        let p = tree.owner[m].unwrap() - nl;
        let mut dist = vec![f64::INFINITY; tn];
        dist[w] = 0.0;
        let mut order = vec![w];
        let mut k = 0;
        while k < order.len() {
            let u = order[k];
            k += 1;
            for &x in &adj[u] {
                if x != m && dist[x].is_infinite() {
                    dist[x] = dist[u] + (tree.depth[u] - tree.depth[x]).abs();
                    order.push(x);
                }
            }
        }
        let rep = order
            .iter()
            .copied()
            .filter(|&u| tree.owner[u].is_some())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)))
            .expect("branch holds a landmark or marker");
        let o = tree.owner[rep].unwrap();
        if o < nl {
            net_position(p, landmarks[o])
        } else {
            let row = &rows[o - nl];
            let net = pieces_approx[p].net.as_slice();
            let v = net.iter().copied().fold(net[0], |b, v| if row[v] < row[b] - EPS { v } else { b });
            net_position(p, v)
        }
    };
    let mut b = GraphBuilder::new(next);
    for t in 1..tn {
        let u = tree.parent[t];
        let len = tree.depth[t] - tree.depth[u];
        let a = if is_marker(t) { attach(t, u) } else { tid[t] };
        let c = if is_marker(u) { attach(u, t) } else { tid[u] };
        b.add_edge(a, c, len)?;
    }
    let mut pieces = Vec::with_capacity(np);
    for (p, a) in pieces_approx.iter().enumerate() {
        for (u, v, l) in a.graph.edges() {
            b.add_edge(piece_base[p] + u, piece_base[p] + v, l)?;
        }
        pieces.push(TreePiece {
            vertices: VertexSet::new((piece_base[p]..piece_base[p] + a.net.len()).collect()),
            member: Some(piece_members[p]),
        });
    }
    let tg = b.build()?;

    let hull_list = hull.vertices.as_slice();
    let mut landmark_index = vec![usize::MAX; n];
    for (i, &v) in landmarks.iter().enumerate() {
        landmark_index[v] = i;
    }
    let map: Vec<(Vertex, Vertex)> = hull_list
        .iter()
        .map(|&v| {
            let image = if piece_of[v] != usize::MAX {
                net_position(piece_of[v], v)
            } else {
                tid[node[landmark_index[v]]]
            };
            (v, image)
        })
        .collect();
    let dx = DistanceMatrix::new(g, hull_list);
    let images: Vec<Vertex> = map.iter().map(|m| m.1).collect::<BTreeSet<_>>().into_iter().collect();
    let dt = DistanceMatrix::new(&tg, &images);
    let pos = |v: Vertex| images.binary_search(&v).unwrap();
    let pairs: Vec<(usize, usize, f64, f64)> = (0..hull_list.len())
        .flat_map(|i| (i + 1..hull_list.len()).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, dx.get(i, j), dt.get(pos(map[i].1), pos(map[j].1))))
        .collect();
    let slack = |c: f64| {
        let mut best = Best::default();
        for &(i, j, x, t) in &pairs {
            let s = (t - c * x).max(x / c - t).max(0.0);
            best.offer(s, || (vec![hull_list[i], hull_list[j]], Vec::new(), format!("d_X={x} d_T={t}")));
        }
        best
    };
    let mut c = 1usize;
    let mut forced = Best::default();
    let mut add = slack(1.0);
    while add.value > c as f64 + EPS {
        forced = add;
        c += 1;
        add = slack(c as f64);
    }
    let mut witnesses = vec![add.witness("C_add")];
    if c > 1 {
        witnesses.push(forced.witness("C_mul"));
    }
    Ok((
        TreeGradedSpace { graph: tg, pieces },
        EmbeddingReport {
            map,
            c_mul: c,
            c_add: add.value,
            realization_error: worst.0,
            pairs: pairs.len(),
            witnesses,
        },
    ))
}
