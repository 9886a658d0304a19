mod common;

use common::{floyd, hausdorff, line, random_graph};
use relhyp::bowditch::*;
use relhyp::cayley::*;
use relhyp::metric::maximal_net;
use relhyp::peripherals::PeripheralFamily;
use relhyp::shortest::geodesic;
use relhyp::transient::{FamilyIndex, TransientParams};
use relhyp::{GraphBuilder, MetricGraph, Vertex, VertexSet};

fn expected_horoball_edges(base: &MetricGraph, depth: usize) -> Vec<(Vertex, Vertex, f64)> {
    let n = base.vertex_count();
    let mut edges = Vec::new();
    for level in 0..=depth {
        for (u, v, l) in base.edges() {
            edges.push((level * n + u, level * n + v, (-(level as f64)).exp() * l));
        }
        if level < depth {
            for v in 0..n {
                edges.push((level * n + v, (level + 1) * n + v, 1.0));
            }
        }
    }
    edges.sort_by_key(|e| (e.0, e.1));
    edges
}

#[test]
fn horoballs_over_random_bases_match_the_definition() {
    for seed in 0..20u64 {
        let n = 5 + (seed as usize * 7) % 26;
        let base = random_graph(n, n / 2, seed % 2 == 0, seed);
        let depth = 1 + (seed as usize % 4);
        let h = build_horoball(&base, depth).unwrap();
        let want = expected_horoball_edges(&base, depth);
        let got = h.graph.edges();
        assert_eq!(got.len(), want.len(), "seed {seed}");
        for (g, w) in got.iter().zip(&want) {
            assert_eq!((g.0, g.1), (w.0, w.1), "seed {seed}");
            assert!((g.2 - w.2).abs() <= 1e-12, "seed {seed}: {g:?} vs {w:?}");
        }
        for v in 0..n {
            for level in 0..=depth {
                assert_eq!(h.graph.distance(h.vertex(v, 0), h.vertex(v, level)), level as f64);
            }
        }
        let oracle = floyd(h.graph.vertex_count(), &want);
        for u in 0..n {
            for v in 0..n {
                assert!((h.graph.distance(u, v) - oracle[u][v]).abs() <= 1e-9, "seed {seed} ({u},{v})");
            }
        }
    }
}

#[test]
fn horoball_level_zero_distance_uses_an_up_across_down_route() {
    let h = build_horoball(&line(9), 4).unwrap();
    let d = h.graph.distance(0, 8);
    let oracle = floyd(h.graph.vertex_count(), &h.graph.edges());
    assert!((d - oracle[0][8]).abs() <= 1e-9);
    assert!(d < 8.0);
    let best = (0..=4).map(|m| 2.0 * m as f64 + (-(m as f64)).exp() * 8.0).fold(f64::INFINITY, f64::min);
    assert!((d - best).abs() <= 1e-9);
}

#[test]
fn approximation_graph_on_the_free_axis_matches_pairwise_distances() {
    let ball = build_ball(&GroupSpec::Free(2), 6).unwrap();
    let fam = peripheral_cosets(&ball, &[CosetSpec::generated_by("a", 2).unwrap().with_representative(vec![])], 1).unwrap();
    let axis = &fam.members[0];
    assert_eq!(axis.len(), 13);
    let a = build_approximation_graph(&ball.graph, axis, 2.0, 2.0).unwrap();
    let net = a.net.as_slice();
    for (i, &u) in net.iter().enumerate() {
        for (j, &v) in net.iter().enumerate() {
            let d = ball.graph.distance(u, v);
            if i != j {
                assert!(d >= 2.0);
            }
            assert_eq!(a.graph.edge_length(i, j).is_some(), i != j && d <= 2.0);
        }
    }
    for p in axis.iter() {
        assert!(net.iter().any(|&u| ball.graph.distance(p, u) < 2.0));
    }
}

fn free_axis_family(radius: usize, min_size: usize) -> (CayleyBall, PeripheralFamily) {
    let ball = build_ball(&GroupSpec::Free(2), radius).unwrap();
    let fam = peripheral_cosets(&ball, &[CosetSpec::generated_by("a", 2).unwrap()], min_size).unwrap();
    (ball, fam)
}

#[test]
fn glued_space_vertex_count_adds_net_levels() {
    let ball = build_ball(&GroupSpec::Free(2), 5).unwrap();
    let fam = peripheral_cosets(&ball, &[CosetSpec::generated_by("a", 2).unwrap().with_representative(vec![])], 1).unwrap();
    let params = BowditchParams {
        depth: Some(4),
        ..Default::default()
    };
    let bow = build_bowditch(&ball.graph, &fam, &params).unwrap();
    let net = maximal_net(&ball.graph, &fam.members[0], params.k);
    assert_eq!(bow.graph.vertex_count(), ball.graph.vertex_count() + net.len() * 4);
    for v in 0..ball.graph.vertex_count() {
        assert_eq!(bow.back(v), BowVertex::X { vertex: v });
    }
}

#[test]
fn far_points_on_a_grid_line_are_close_through_the_horoball() {
    let ball = build_ball(&GroupSpec::FreeAbelian(2), 5).unwrap();
    let fam = peripheral_cosets(&ball, &[CosetSpec::generated_by("a", 2).unwrap().with_representative(vec![])], 1).unwrap();
    let bow = build_bowditch(&ball.graph, &fam, &BowditchParams::default()).unwrap();
    let x = ball.vertex_of("aaaaa").unwrap().unwrap();
    let y = ball.vertex_of("AAAAA").unwrap().unwrap();
    let depth = bow.members[0].depth() as f64;
    let oracle = floyd(bow.graph.vertex_count(), &bow.graph.edges());
    let d = bow.graph.distance(x, y);
    assert!((d - oracle[x][y]).abs() <= 1e-9);
    assert!(d < ball.graph.distance(x, y));
    assert!(d <= 2.0 * depth + 2.0 + 1e-9, "d_Bow {d}, depth {depth}");
}

#[test]
fn glued_tree_with_empty_family_has_zero_delta() {
    let g = common::random_tree(40, 3);
    let bow = build_bowditch(&g, &PeripheralFamily::empty(), &BowditchParams::default()).unwrap();
    assert_eq!(bow.graph.edges(), g.edges());
    assert_eq!(check_rh1(&bow, None, &Rh1Params::default()).get("delta"), Some(0.0));
}

#[test]
fn trace_of_same_coset_geodesic_stays_near_transient_collars() {
    let (ball, fam) = free_axis_family(5, 3);
    let params = BowditchParams {
        k: 1.0,
        r: 1.0,
        ..Default::default()
    };
    let bow = build_bowditch(&ball.graph, &fam, &params).unwrap();
    let tp = TransientParams::new(1.0, 1.0);
    let index = FamilyIndex::new(&ball.graph, &fam, tp.mu);
    let x = ball.vertex_of("aaaa").unwrap().unwrap();
    let y = ball.vertex_of("AAAA").unwrap().unwrap();
    let cmp = trace_vs_transient(&bow, &index, x, y, &tp).unwrap();
    let oracle = floyd(ball.graph.vertex_count(), &ball.graph.edges());
    assert!((cmp.distance - hausdorff(&oracle, &cmp.trace, &cmp.transient)).abs() <= 1e-9);
    assert!(cmp.distance <= params.k + params.r, "distance {}", cmp.distance);
    let near = ball.vertex_of("aaa").unwrap().unwrap();
    assert!(trace_vs_transient(&bow, &index, x, near, &tp).unwrap().distance <= 1.0);
    let empty = build_bowditch(&ball.graph, &PeripheralFamily::empty(), &params).unwrap();
    let none = FamilyIndex::new(&ball.graph, &PeripheralFamily::empty(), 1.0);
    assert_eq!(trace_vs_transient(&empty, &none, x, y, &tp).unwrap().distance, 0.0);
}

#[test]
fn horoball_excursion_is_replaced_by_the_axis_segment() {
    let (ball, fam) = free_axis_family(6, 3);
    let bow = build_bowditch(&ball.graph, &fam, &BowditchParams::default()).unwrap();
    let x = ball.vertex_of("aaaaaa").unwrap().unwrap();
    let y = ball.vertex_of("AAAAAA").unwrap().unwrap();
    let path = geodesic(&bow.graph, x, y);
    assert!(path.vertices.iter().any(|&v| !bow.is_ambient(v)));
    let dv = devertical(&bow, &path).unwrap();
    assert_eq!(dv.path.start(), x);
    assert_eq!(dv.path.end(), y);
    let axis: VertexSet = fam.members.iter().find(|m| m.contains(x)).unwrap().clone();
    assert!(dv.path.vertices.iter().all(|&v| axis.contains(v)));
    assert!((dv.path.length() - ball.graph.distance(x, y)).abs() <= 1e-9);
    assert!(dv.excursions >= 1);
    assert_eq!(dv.k, 1);
    let plain = geodesic(&ball.graph, x, ball.vertex_of("b").unwrap().unwrap());
    assert_eq!(devertical(&bow, &plain).unwrap().path.vertices, plain.vertices);
    let two = geodesic(&ball.graph, x, ball.vertex_of("aaaaa").unwrap().unwrap());
    let d2 = devertical(&bow, &two).unwrap();
    assert_eq!((d2.path.vertices.len(), d2.k), (2, 1));
}

#[test]
fn glued_space_text_lists_backmap_records() {
    let mut b = GraphBuilder::new(3);
    b.add_edge(0, 1, 1.0).unwrap();
    b.add_edge(1, 2, 1.0).unwrap();
    let g = b.build().unwrap();
    let fam = PeripheralFamily::new(vec![VertexSet::new(vec![0, 1, 2])], 1.0);
    let bow = build_bowditch(&g, &fam, &BowditchParams { k: 1.0, r: 1.0, depth: Some(2), ..Default::default() }).unwrap();
    let text = bow.to_text();
    assert_eq!(text.lines().filter(|l| l.starts_with("BACKMAP")).count(), bow.graph.vertex_count());
    assert_eq!(bow.graph.vertex_count(), 9);
}
