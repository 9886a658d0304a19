mod common;

use common::{floyd, grid, hausdorff};
use relhyp::cayley::*;
use relhyp::peripherals::PeripheralFamily;
use relhyp::sampling::choose;
use relhyp::shortest::geodesic;
use relhyp::transient::*;
use relhyp::{MetricGraph, Mode, PathInSpace, VertexSet};

/// Deep indices by scanning all witness pairs `j < i < k`.
fn deep_oracle(g: &MetricGraph, fam: &PeripheralFamily, path: &PathInSpace, mu: f64, c: f64) -> Vec<usize> {
    let v = &path.vertices;
    let near = |p: usize, m: &VertexSet| m.iter().any(|q| g.distance(v[p], q) <= mu + 1e-9);
    let mut deep = Vec::new();
    for i in 0..v.len() {
        let hit = fam.members.iter().any(|m| {
            (0..i).any(|j| near(j, m) && g.distance(v[i], v[j]) > c)
                && (i + 1..v.len()).any(|k| near(k, m) && g.distance(v[i], v[k]) > c)
        });
        if hit {
            deep.push(i);
        }
    }
    deep
}

fn deep_of(dec: &TransientDecomposition) -> Vec<usize> {
    (0..dec.path.len()).filter(|&i| !dec.is_transient(i)).collect()
}

fn free_product(radius: usize) -> (CayleyBall, PeripheralFamily) {
    let ball = build_ball(&GroupSpec::parse("free_product(free_abelian(2),free(1))").unwrap(), radius).unwrap();
    let fam = peripheral_cosets(&ball, &[CosetSpec::generated_by("ab", 3).unwrap()], 1).unwrap();
    (ball, fam)
}

#[test]
fn axis_geodesic_decomposition_matches_witness_scan() {
    let ball = build_ball(&GroupSpec::Free(2), 6).unwrap();
    let fam = peripheral_cosets(&ball, &[CosetSpec::generated_by("a", 2).unwrap().with_representative(vec![])], 1).unwrap();
    let x = ball.vertex_of("AAAA").unwrap().unwrap();
    let y = ball.vertex_of("aaaa").unwrap().unwrap();
    let path = geodesic(&ball.graph, x, y);
    assert_eq!(path.len(), 9);
    let params = TransientParams::new(0.0, 2.0);
    let dec = decompose(&ball.graph, &fam, &path, &params);
    let oracle = deep_oracle(&ball.graph, &fam, &path, 0.0, 2.0);
    assert_eq!(deep_of(&dec), oracle);
    assert_eq!(oracle, vec![3, 4, 5]);
}

#[test]
fn free_product_decompositions_match_witness_scan() {
    let (ball, fam) = free_product(4);
    let pool = ball.graph.all_vertices();
    let pts = choose(pool.as_slice(), 40, 9, "ends");
    for params in [TransientParams::new(0.0, 1.0), TransientParams::new(1.0, 2.0)] {
        for w in pts.chunks(2) {
            let path = geodesic(&ball.graph, w[0], w[1]);
            let dec = decompose(&ball.graph, &fam, &path, &params);
            assert_eq!(deep_of(&dec), deep_oracle(&ball.graph, &fam, &path, params.mu, params.c), "{w:?}");
            for c in &dec.deep_components {
                assert!(fam.members[c.member].iter().any(|q| (c.start..=c.end).any(|i| ball.graph.distance(path.vertices[i], q) <= params.mu + params.c + 1e-9)));
            }
        }
    }
}

#[test]
fn rips_constant_vanishes_on_trees() {
    for seed in 0..4 {
        let g = common::random_tree(40, seed);
        let r = check_relative_rips(&g, &PeripheralFamily::empty(), 1.0, 2.0, &g.all_vertices(), Mode::Exhaustive);
        assert_eq!(r.get("D"), Some(0.0), "seed {seed}");
    }
}

#[test]
fn rips_constant_grows_on_grid_balls() {
    let mut ds = Vec::new();
    for radius in [3, 4, 5] {
        let ball = build_ball(&GroupSpec::FreeAbelian(2), radius).unwrap();
        let pool = ball.graph.all_vertices();
        let r = check_relative_rips(&ball.graph, &PeripheralFamily::empty(), 1.0, 2.0, &pool, Mode::Exhaustive);
        ds.push(r.get("D").unwrap());
    }
    assert!(ds[0] < ds[1] && ds[1] < ds[2], "{ds:?}");
}

#[test]
fn peripheral_clause_on_axis_and_on_grid_lines() {
    let ball = build_ball(&GroupSpec::Free(2), 5).unwrap();
    let fam = peripheral_cosets(&ball, &[CosetSpec::generated_by("a", 2).unwrap()], 3).unwrap();
    let free = check_rh3_cond2(&ball.graph, &fam, 1.0, 2.0, 1.0, &ball.graph.all_vertices(), Mode::Sampled { count: 400, seed: 4 });
    let bounded = free.get("K").unwrap();
    assert!(bounded <= 4.0, "K = {bounded}");
    let mut ks = Vec::new();
    for radius in [4, 6] {
        let ball = build_ball(&GroupSpec::FreeAbelian(2), radius).unwrap();
        let fam = peripheral_cosets(&ball, &[CosetSpec::generated_by("a", 2).unwrap()], 3).unwrap();
        let r = check_rh3_cond2(&ball.graph, &fam, 0.0, 1.0, 3.0, &ball.graph.all_vertices(), Mode::Exhaustive);
        ks.push(r.get("K").unwrap());
    }
    assert!(ks[1] > ks[0], "{ks:?}");
}

#[test]
fn tree_triangles_have_tripod_centers() {
    let g = common::random_tree(30, 8);
    let d = floyd(30, &g.edges());
    for tri in [[3, 17, 25], [0, 29, 14], [5, 5, 5]] {
        match classify_triangle_atg(&g, &PeripheralFamily::empty(), &TriangleSample::new(&g, tri[0], tri[1], tri[2]), 0.0, 0.0) {
            AtgCase::Center { center, radius } => {
                assert_eq!(radius, 0.0);
                let [a, b, c] = tri;
                assert_eq!(d[a][center] + d[center][b], d[a][b]);
                assert_eq!(d[b][center] + d[center][c], d[b][c]);
                assert_eq!(d[a][center] + d[center][c], d[a][c]);
            }
            other => panic!("{tri:?}: {other:?}"),
        }
    }
}

#[test]
fn fat_triangle_in_a_plane_coset_is_peripheral() {
    let (ball, fam) = free_product(5);
    let [a, b, c] = ["e", "aabbb", "AAbbb"].map(|w| ball.vertex_of(w).unwrap().unwrap());
    let tri = TriangleSample::new(&ball.graph, a, b, c);
    let sigma = 1.0;
    let case = classify_triangle_atg(&ball.graph, &fam, &tri, sigma, 2.0);
    let plane = fam.members.iter().position(|m| m.contains(0)).unwrap();
    assert!(matches!(case, AtgCase::Peripheral { member, .. } if member == plane), "{case:?}");
    let sides = [geodesic(&ball.graph, a, b), geodesic(&ball.graph, b, c), geodesic(&ball.graph, c, a)];
    let best = (0..ball.graph.vertex_count())
        .map(|v| {
            sides
                .iter()
                .map(|s| s.vertices.iter().map(|&p| ball.graph.distance(v, p)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min);
    assert!(best > sigma, "a center with radius {best} exists");
}

#[test]
fn stability_of_two_grid_geodesics_is_their_hausdorff_distance() {
    let g = grid(6, 6);
    let d = floyd(36, &g.edges());
    let a = PathInSpace::from_vertices(&g, vec![0, 1, 2, 3, 4, 5, 11, 17, 23, 29, 35]).unwrap();
    let b = PathInSpace::from_vertices(&g, vec![0, 6, 12, 18, 24, 30, 31, 32, 33, 34, 35]).unwrap();
    let r = check_transient_stability(&g, &PeripheralFamily::empty(), &TransientParams::new(1.0, 2.0), &[(a.clone(), b.clone())]).unwrap();
    assert_eq!(r.get("M"), Some(hausdorff(&d, &a.vertices, &b.vertices)));
    let same = check_transient_stability(&g, &PeripheralFamily::empty(), &TransientParams::new(1.0, 2.0), &[(a.clone(), a)]).unwrap();
    assert_eq!(same.get("M"), Some(0.0));
}

#[test]
fn perturbed_paths_compare_boundedly_with_the_transient_family() {
    let (ball, fam) = free_product(4);
    let params = TransientParams::new(1.0, 2.0);
    let pool = VertexSet::new(choose(ball.interior(1).as_slice(), 12, 3, "gg"));
    let family = GGFamily::transient(&ball.graph, &fam, &pool, &params);
    let own: Vec<PathInSpace> = family.entries.values().map(|e| e.eta.clone()).collect();
    assert_eq!(gg_compare(&ball.graph, &fam, &family, &params, &own).unwrap().get("L+c"), Some(0.0));
    let pairs = sample_path_pairs(&ball.graph, &pool, 30, 2.0, 5);
    let betas: Vec<PathInSpace> = pairs.into_iter().map(|p| p.1).collect();
    let r = gg_compare(&ball.graph, &fam, &family, &params, &betas).unwrap();
    assert!(r.get("L+c").unwrap() <= 6.0, "{:?}", r.get("L+c"));
}
