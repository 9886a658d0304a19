//! Coarse-geometric primitives over a [`MetricGraph`]: neighborhoods,
//! Hausdorff distance, nets, coarse connectivity and the four-point defect.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::graph::{MetricGraph, PathInSpace, Vertex, VertexSet, EPS};
use crate::sampling::{rng_for, Mode};
use crate::shortest::{distance_to_set_row, multi_source, single_source};

/// Vertices at distance at most `r` from `s`.
pub fn neighborhood(g: &MetricGraph, s: &VertexSet, r: f64) -> VertexSet {
    if s.is_empty() {
        return VertexSet::default();
    }
    multi_source(g, s.as_slice(), r)
        .into_iter()
        .map(|(v, _)| v)
        .collect()
}

/// `sup_{a in A} d(a, B)`.
pub fn directed_hausdorff(g: &MetricGraph, a: &VertexSet, b: &VertexSet) -> Result<f64, GraphError> {
    Ok(directed_hausdorff_witness(g, a, b)?.0)
}

/// Directed Hausdorff distance plus the point of `a` achieving it.
pub fn directed_hausdorff_witness(
    g: &MetricGraph,
    a: &VertexSet,
    b: &VertexSet,
) -> Result<(f64, Vertex), GraphError> {
    if a.is_empty() || b.is_empty() {
        return Err(GraphError::EmptySet);
    }
    let n = g.vertex_count();
    let mut best = (0.0, a.as_slice()[0]);
    if a.len() <= 64 {
        let mask = b.mask(n);
        for v in a.iter() {
            let d = g.distance_to_mask(v, &mask);
            if d > best.0 + EPS {
                best = (d, v);
            }
        }
    } else {
        let row = distance_to_set_row(g, b.as_slice());
        for v in a.iter() {
            if row[v] > best.0 + EPS {
                best = (row[v], v);
            }
        }
    }
    Ok(best)
}

/// Symmetric Hausdorff distance between two nonempty vertex sets.
pub fn hausdorff_distance(g: &MetricGraph, a: &VertexSet, b: &VertexSet) -> Result<f64, GraphError> {
    Ok(directed_hausdorff(g, a, b)?.max(directed_hausdorff(g, b, a)?))
}

/// Greedy maximal `k`-separated subset of `s`, scanning ids in ascending order.
pub fn maximal_net(g: &MetricGraph, s: &VertexSet, k: f64) -> VertexSet {
    let mut blocked = vec![false; g.vertex_count()];
    let mut net = Vec::new();
    for v in s.iter() {
        if blocked[v] {
            continue;
        }
        net.push(v);
        for (w, d) in multi_source(g, &[v], k) {
            if d < k - EPS {
                blocked[w] = true;
            }
        }
    }
    VertexSet::new(net)
}

/// Result of a coarse connectivity test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Connectivity {
    pub connected: bool,
    /// On failure, one vertex from each of two distinct chain components.
    pub witness: Option<(Vertex, Vertex)>,
    pub components: usize,
}

/// Whether the graph on `s` joining points at distance `<= k` is connected.
pub fn is_coarsely_connected(g: &MetricGraph, s: &VertexSet, k: f64) -> Connectivity {
    let members = s.as_slice();
    let n = g.vertex_count();
    let mut index = vec![usize::MAX; n];
    for (i, &v) in members.iter().enumerate() {
        index[v] = i;
    }
    let mut comp = vec![usize::MAX; members.len()];
    let mut firsts = Vec::new();
    for start in 0..members.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = firsts.len();
        firsts.push(members[start]);
        comp[start] = id;
        let mut stack = vec![members[start]];
        while let Some(u) = stack.pop() {
            for (w, _) in multi_source(g, &[u], k) {
                let i = index[w];
                if i != usize::MAX && comp[i] == usize::MAX {
                    comp[i] = id;
                    stack.push(w);
                }
            }
        }
    }
    Connectivity {
        connected: firsts.len() <= 1,
        witness: (firsts.len() > 1).then(|| (firsts[0], firsts[1])),
        components: firsts.len(),
    }
}

/// Four-point defect of a quadruple from its six pairwise distances:
/// half the gap between the two largest of the three pair sums.
pub fn four_point_defect(dxy: f64, dzw: f64, dxz: f64, dyw: f64, dxw: f64, dyz: f64) -> f64 {
    let mut s = [dxy + dzw, dxz + dyw, dxw + dyz];
    s.sort_by(f64::total_cmp);
    (s[2] - s[1]) / 2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta: f64,
    pub witness: Option<[Vertex; 4]>,
    pub samples: usize,
}

/// Dense distance matrix over a vertex subset; rows computed in parallel.
pub struct DistanceMatrix {
    pub vertices: Vec<Vertex>,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(g: &MetricGraph, vertices: &[Vertex]) -> Self {
        let m = vertices.len();
        let rows: Vec<Vec<f64>> = vertices
            .par_iter()
            .map(|&v| {
                let row = single_source(g, v, None);
                vertices.iter().map(|&w| row[w]).collect()
            })
            .collect();
        let mut d = Vec::with_capacity(m * m);
        for r in rows {
            d.extend(r);
        }
        DistanceMatrix {
            vertices: vertices.to_vec(),
            d,
        }
    }

    pub fn size(&self) -> usize {
        self.vertices.len()
    }

    /// Distance between the `i`-th and `j`-th subset vertices.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.vertices.len() + j]
    }

    fn defect(&self, q: [usize; 4]) -> f64 {
        let [x, y, z, w] = q;
        four_point_defect(
            self.get(x, y),
            self.get(z, w),
            self.get(x, z),
            self.get(y, w),
            self.get(x, w),
            self.get(y, z),
        )
    }

    /// Four-point delta restricted to the subset.
    pub fn four_point_delta(&self, mode: &Mode) -> DeltaEstimate {
        let m = self.size();
        if m < 4 {
            return DeltaEstimate {
                delta: 0.0,
                witness: None,
                samples: 0,
            };
        }
        let best: Vec<(f64, [usize; 4], usize)> = match mode {
            Mode::Exhaustive => (0..m)
                .into_par_iter()
                .map(|x| {
                    let mut best = (0.0, [x, x, x, x], 0usize);
                    for y in x + 1..m {
                        for z in y + 1..m {
                            for w in z + 1..m {
                                let d = self.defect([x, y, z, w]);
                                best.2 += 1;
                                if d > best.0 + EPS {
                                    best.0 = d;
                                    best.1 = [x, y, z, w];
                                }
                            }
                        }
                    }
                    best
                })
                .collect(),
            Mode::Sampled { count, seed } => {
                let mut rng = rng_for(*seed, "four-point");
                let quads: Vec<[usize; 4]> = (0..*count)
                    .map(|_| {
                        [
                            rng.gen_range(0..m),
                            rng.gen_range(0..m),
                            rng.gen_range(0..m),
                            rng.gen_range(0..m),
                        ]
                    })
                    .collect();
                quads
                    .par_iter()
                    .map(|&q| (self.defect(q), q, 1))
                    .collect()
            }
        };
        let mut out = (0.0, None, 0);
        for (d, q, s) in best {
            out.2 += s;
            if d > out.0 + EPS {
                out.0 = d;
                out.1 = Some(q.map(|i| self.vertices[i]));
            }
        }
        DeltaEstimate {
            delta: out.0,
            witness: out.1,
            samples: out.2,
        }
    }
}

/// Four-point delta of the whole graph.
pub fn four_point_delta(g: &MetricGraph, mode: &Mode) -> Result<DeltaEstimate, GraphError> {
    if g.vertex_count() < 4 {
        return Err(GraphError::parse(0, "four-point delta needs at least 4 vertices"));
    }
    let all: Vec<Vertex> = (0..g.vertex_count()).collect();
    Ok(DistanceMatrix::new(g, &all).four_point_delta(mode))
}

/// Four-point delta on a seeded subsample of at most `subsample` vertices,
/// exhaustive over the subsample.
pub fn four_point_delta_subsample(
    g: &MetricGraph,
    pool: &[Vertex],
    subsample: usize,
    seed: u64,
) -> DeltaEstimate {
    let chosen = crate::sampling::choose(pool, subsample, seed, "four-point-subsample");
    DistanceMatrix::new(g, &chosen).four_point_delta(&Mode::Exhaustive)
}

/// Distances among a fixed vertex list, looked up by vertex id.
pub struct LocalMetric {
    pos: HashMap<Vertex, usize>,
    matrix: DistanceMatrix,
}

impl LocalMetric {
    pub fn new(g: &MetricGraph, vertices: impl IntoIterator<Item = Vertex>) -> Self {
        let list: Vec<Vertex> = vertices.into_iter().collect::<VertexSet>().into_vec();
        let pos = list.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        LocalMetric {
            pos,
            matrix: DistanceMatrix::new(g, &list),
        }
    }

    pub fn d(&self, u: Vertex, v: Vertex) -> f64 {
        self.matrix.get(self.pos[&u], self.pos[&v])
    }

    pub fn to_set(&self, u: Vertex, set: &[Vertex]) -> f64 {
        set.iter().map(|&v| self.d(u, v)).fold(f64::INFINITY, f64::min)
    }

    /// `sup_{a in A} d(a, B)` with the attaining point.
    pub fn directed(&self, a: &[Vertex], b: &[Vertex]) -> (f64, Option<Vertex>) {
        let mut best = (0.0, a.first().copied());
        for &u in a {
            let d = self.to_set(u, b);
            if d > best.0 + EPS {
                best = (d, Some(u));
            }
        }
        best
    }

    pub fn hausdorff(&self, a: &[Vertex], b: &[Vertex]) -> f64 {
        self.directed(a, b).0.max(self.directed(b, a).0)
    }

    pub fn diameter(&self, a: &[Vertex]) -> (f64, Option<(Vertex, Vertex)>) {
        let mut best = (0.0, None);
        for (i, &u) in a.iter().enumerate() {
            for &v in &a[i + 1..] {
                let d = self.d(u, v);
                if d > best.0 + EPS {
                    best = (d, Some((u, v)));
                }
            }
        }
        best
    }
}

/// Smallest integer `K >= 1` such that the path is a `(K, K)`-quasi-geodesic,
/// i.e. `arclength(i, j) <= K d(v_i, v_j) + K^2` for all `i < j`.
pub fn kk_constant(path: &PathInSpace, d: impl Fn(Vertex, Vertex) -> f64) -> usize {
    let mut k = 1usize;
    let n = path.len();
    for i in 0..n {
        for j in i + 1..n {
            let a = path.arclength(i, j);
            let dij = d(path.vertices[i], path.vertices[j]);
            let kf = k as f64;
            if a > kf * dij + kf * kf + EPS {
                let need = ((-dij + (dij * dij + 4.0 * a).sqrt()) / 2.0 - EPS).ceil().max(1.0) as usize;
                k = k.max(need);
                let kf = k as f64;
                if a > kf * dij + kf * kf + EPS {
                    k += 1;
                }
            }
        }
    }
    k
}

/// Diameter of `s` measured in `g`.
pub fn set_diameter(g: &MetricGraph, s: &VertexSet) -> (f64, Option<(Vertex, Vertex)>) {
    let members = s.as_slice();
    let mut best = (0.0, None);
    for (i, &u) in members.iter().enumerate() {
        if members.len() - i < 2 {
            break;
        }
        let row = if members.len() > 32 {
            Some(g.distances_from(u))
        } else {
            None
        };
        for &v in &members[i + 1..] {
            let d = match &row {
                Some(r) => r[v],
                None => g.distance(u, v),
            };
            if d > best.0 + EPS {
                best = (d, Some((u, v)));
            }
        }
    }
    best
}
