use relhyp::cayley::*;
use relhyp::metric::neighborhood;
use relhyp::peripherals::*;
use relhyp::{Mode, VertexSet};

fn family(spec: GroupSpec, radius: usize, min_size: usize) -> (CayleyBall, PeripheralFamily) {
    let ball = build_ball(&spec, radius).unwrap();
    let fam = peripheral_cosets(&ball, &[CosetSpec::generated_by("a", 2).unwrap()], min_size).unwrap();
    (ball, fam)
}

fn alpha1_oracle(ball: &CayleyBall, fam: &PeripheralFamily, k: f64) -> f64 {
    let g = &ball.graph;
    let n = g.vertex_count();
    let masks: Vec<Vec<bool>> = fam.members.iter().map(|m| neighborhood(g, m, k).mask(n)).collect();
    let mut best = 0.0f64;
    for i in 0..masks.len() {
        for j in i + 1..masks.len() {
            let inter: Vec<usize> = (0..n).filter(|&v| masks[i][v] && masks[j][v]).collect();
            for &u in &inter {
                let row = g.distances_from(u);
                for &v in &inter {
                    best = best.max(row[v]);
                }
            }
        }
    }
    best
}

#[test]
fn free_axis_cosets_have_small_coarse_intersections() {
    let (ball, fam) = family(GroupSpec::Free(2), 5, 1);
    let r = check_alpha1(&ball.graph, &fam, 1.0, 0.5);
    let b = r.get("B").unwrap();
    assert_eq!(b, alpha1_oracle(&ball, &fam, 1.0));
    assert!(b <= 2.0, "B = {b}");
    assert!(!r.violation);
    assert!(r.witnesses_consistent());
}

#[test]
fn parallel_lines_have_growing_coarse_intersections() {
    let mut bs = Vec::new();
    for radius in [4, 5, 6] {
        let (ball, fam) = family(GroupSpec::FreeAbelian(2), radius, 1);
        let r = check_alpha1(&ball.graph, &fam, 1.0, 0.5);
        if radius == 4 {
            assert_eq!(r.get("B").unwrap(), alpha1_oracle(&ball, &fam, 1.0));
        }
        bs.push(r.get("B").unwrap());
        if radius == 6 {
            assert!(r.violation);
        }
    }
    assert!(bs[0] < bs[1] && bs[1] < bs[2], "{bs:?}");
}

#[test]
fn free_axis_geodesics_enter_the_coset() {
    let (ball, fam) = family(GroupSpec::Free(2), 5, 3);
    let r = check_alpha2(&ball.graph, &fam, 0.5, 0.0, &ball.graph.all_vertices(), Mode::Sampled { count: 400, seed: 1 }, 2);
    assert_eq!(r.get("M"), Some(0.0));
    assert!(!r.violation);
}

#[test]
fn projection_of_word_off_the_axis() {
    let ball = build_ball(&GroupSpec::Free(2), 5).unwrap();
    let fam = peripheral_cosets(&ball, &[CosetSpec::generated_by("a", 2).unwrap().with_representative(vec![])], 1).unwrap();
    let x = ball.vertex_of("baaa").unwrap().unwrap();
    assert_eq!(project(&ball.graph, x, &fam.members[0]).unwrap(), 0);
    let on = ball.vertex_of("aaa").unwrap().unwrap();
    assert_eq!(project(&ball.graph, on, &fam.members[0]).unwrap(), on);
}

fn projection_params(count: usize) -> ProjectionParams {
    ProjectionParams {
        sample: SampleParams {
            count,
            seed: 2,
            perturbations: 2,
        },
        ..Default::default()
    }
}

#[test]
fn free_axis_projections_concentrate() {
    let (ball, fam) = family(GroupSpec::Free(2), 5, 3);
    let r = audit_projection_lemmas(&ball.graph, &fam, &ball.interior(1), &projection_params(150));
    assert!(r.get("C").unwrap() <= 1.0, "C = {:?}", r.get("C"));
    assert_eq!(r.get("t"), Some(1.0));
}

#[test]
fn parallel_lines_project_isometrically() {
    let mut ls = Vec::new();
    for radius in [4, 6] {
        let (ball, fam) = family(GroupSpec::FreeAbelian(2), radius, 3);
        let pool: VertexSet = ball.graph.all_vertices();
        let r = audit_projection_lemmas(&ball.graph, &fam, &pool, &projection_params(2000));
        ls.push((r.get("L").unwrap(), r.get("C").unwrap()));
    }
    assert!(ls[1].0 > ls[0].0 && ls[1].1 > ls[0].1, "{ls:?}");
    assert!(ls[1].0 >= 5.0, "{ls:?}");
}
