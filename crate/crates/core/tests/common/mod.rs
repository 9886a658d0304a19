#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relhyp::{GraphBuilder, MetricGraph, Vertex};

pub fn line(n: usize) -> MetricGraph {
    let mut b = GraphBuilder::new(n);
    for v in 1..n {
        b.add_edge(v - 1, v, 1.0).unwrap();
    }
    b.build().unwrap()
}

/// `w x h` grid, vertex `y * w + x`.
pub fn grid(w: usize, h: usize) -> MetricGraph {
    let mut b = GraphBuilder::new(w * h);
    for y in 0..h {
        for x in 0..w {
            let v = y * w + x;
            if x + 1 < w {
                b.add_edge(v, v + 1, 1.0).unwrap();
            }
            if y + 1 < h {
                b.add_edge(v, v + w, 1.0).unwrap();
            }
        }
    }
    b.build().unwrap()
}

pub fn random_tree(n: usize, seed: u64) -> MetricGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new(n);
    for v in 1..n {
        b.add_edge(rng.gen_range(0..v), v, 1.0).unwrap();
    }
    b.build().unwrap()
}

/// Connected graph on `n` vertices: a random spanning tree plus `extra`
/// random edges with lengths in `{1, 2, 3}` or unit lengths.
pub fn random_graph(n: usize, extra: usize, weighted: bool, seed: u64) -> MetricGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new(n);
    let len = |rng: &mut ChaCha8Rng| if weighted { rng.gen_range(1..=3) as f64 } else { 1.0 };
    for v in 1..n {
        let u = rng.gen_range(0..v);
        let l = len(&mut rng);
        b.add_edge(u, v, l).unwrap();
    }
    for _ in 0..extra {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            let l = len(&mut rng);
            b.add_edge(u, v, l).unwrap();
        }
    }
    b.build().unwrap()
}

/// All-pairs distances by Floyd-Warshall over an explicit edge list.
pub fn floyd(n: usize, edges: &[(Vertex, Vertex, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0.0;
    }
    for &(u, v, l) in edges {
        d[u][v] = d[u][v].min(l);
        d[v][u] = d[v][u].min(l);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Quadratic Dijkstra avoiding `forbidden` vertices.
pub fn dijkstra_avoiding(g: &MetricGraph, s: Vertex, forbidden: &[bool]) -> Vec<f64> {
    let n = g.vertex_count();
    let mut d = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    if forbidden[s] {
        return d;
    }
    d[s] = 0.0;
    loop {
        let mut u = usize::MAX;
        for v in 0..n {
            if !done[v] && d[v].is_finite() && (u == usize::MAX || d[v] < d[u]) {
                u = v;
            }
        }
        if u == usize::MAX {
            return d;
        }
        done[u] = true;
        for &(w, l) in g.neighbors(u) {
            if !forbidden[w] && d[u] + l < d[w] {
                d[w] = d[u] + l;
            }
        }
    }
}

/// Largest four-point defect over all quadruples of `pts`.
pub fn brute_delta(d: &[Vec<f64>], pts: &[Vertex]) -> f64 {
    let mut best = 0.0f64;
    for &x in pts {
        for &y in pts {
            for &z in pts {
                for &w in pts {
                    let mut s = [d[x][y] + d[z][w], d[x][z] + d[y][w], d[x][w] + d[y][z]];
                    s.sort_by(f64::total_cmp);
                    best = best.max((s[2] - s[1]) / 2.0);
                }
            }
        }
    }
    best
}

pub fn hausdorff(d: &[Vec<f64>], a: &[Vertex], b: &[Vertex]) -> f64 {
    let dir = |a: &[Vertex], b: &[Vertex]| a.iter().map(|&x| b.iter().map(|&y| d[x][y]).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    dir(a, b).max(dir(b, a))
}
