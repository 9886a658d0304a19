#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::{floyd, random_graph, random_tree};
use relhyp::bowditch::{build_bowditch, build_horoball, trace_vs_transient, BowditchParams};
use relhyp::cayley::{build_ball, build_ball_with, peripheral_cosets, BallLimits, CayleyBall, CosetSpec, GroupSpec};
use relhyp::coned::{build_coned_off, check_rh2, Rh2Params};
use relhyp::divergence::{check_log_detour, classify_growth, default_margin, div_function, div_point, DivergenceParams, Growth};
use relhyp::metric::hausdorff_distance;
use relhyp::peripherals::PeripheralFamily;
use relhyp::sampling::choose;
use relhyp::shortest::geodesic;
use relhyp::transient::{
    check_relative_rips, gg_condition_audit, pool_pairs, FamilyIndex, GGFamily, GGParams, TransientParams,
};
use relhyp::tree_approx::{build_tree_graded_approx, verify_tree_graded, Configuration, TreeCheck, TreeParams};
use relhyp::{Mode, Vertex, VertexSet};
use serde_json::Value;

const EDGE_TOL: f64 = 1e-12;
const LEVEL0_TOL: f64 = 1e-9;
const STABLE_STEP: f64 = 1.0;
const GG_CAP: f64 = 10.0;
const EXP_RESIDUAL_RATIO: f64 = 2.0;
const TREE_C_MUL_MAX: usize = 3;
const TREE_C_ADD_MAX: f64 = 6.0;

const FREE_PRODUCT: &str = "free_product(free_abelian(2),free(1))";

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn free_product(radius: usize) -> (CayleyBall, PeripheralFamily) {
    let ball = build_ball(&GroupSpec::parse(FREE_PRODUCT).unwrap(), radius).unwrap();
    let fam = peripheral_cosets(&ball, &[CosetSpec::generated_by("ab", 3).unwrap()], 3).unwrap();
    (ball, fam)
}

/// Runs the CLI; returns the exit code.
fn cli(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_relhyp"))
        .args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// `(check, constant) -> [(radius, value)]` from a report CSV.
fn csv_series(path: &Path) -> BTreeMap<(String, String), Vec<(usize, f64)>> {
    let mut out: BTreeMap<(String, String), Vec<(usize, f64)>> = BTreeMap::new();
    let mut r = csv::Reader::from_path(path).unwrap();
    for rec in r.records() {
        let rec = rec.unwrap();
        out.entry((rec[1].to_string(), rec[2].to_string()))
            .or_default()
            .push((rec[0].parse().unwrap(), rec[3].parse().unwrap()));
    }
    out
}

fn ac1() -> Verdict {
    let mut checked = 0;
    for seed in 0..20u64 {
        let n = 5 + (seed as usize * 7) % 26;
        let base = random_graph(n, n / 2, seed % 2 == 0, seed);
        let depth = 1 + (seed as usize % 4);
        let h = build_horoball(&base, depth).unwrap();
        let mut want = Vec::new();
        for level in 0..=depth {
            for (u, v, l) in base.edges() {
                want.push((level * n + u, level * n + v, (-(level as f64)).exp() * l));
            }
            if level < depth {
                for v in 0..n {
                    want.push((level * n + v, (level + 1) * n + v, 1.0));
                }
            }
        }
        want.sort_by_key(|e| (e.0, e.1));
        let got = h.graph.edges();
        if got.len() != want.len() || got.iter().zip(&want).any(|(g, w)| (g.0, g.1) != (w.0, w.1) || (g.2 - w.2).abs() > EDGE_TOL) {
            return verdict(false, format!("seed {seed}: edge multiset differs"));
        }
        for v in 0..n {
            for level in 0..=depth {
                if h.graph.distance(h.vertex(v, 0), h.vertex(v, level)) != level as f64 {
                    return verdict(false, format!("seed {seed}: vertical ray at {v} level {level}"));
                }
            }
        }
        let oracle = floyd(h.graph.vertex_count(), &want);
        for u in 0..n {
            for v in 0..n {
                if (h.graph.distance(u, v) - oracle[u][v]).abs() > LEVEL0_TOL {
                    return verdict(false, format!("seed {seed}: level-0 distance {u}-{v}"));
                }
            }
        }
        checked += 1;
    }
    verdict(true, format!("{checked} random bases: edges exact, rays exact, level 0 within {LEVEL0_TOL:e}"))
}

fn ac2() -> Verdict {
    let empty = PeripheralFamily::empty();
    for seed in 0..5 {
        let g = random_tree(40, seed);
        let r = check_relative_rips(&g, &empty, 1.0, 2.0, &g.all_vertices(), Mode::Exhaustive);
        if r.get("D") != Some(0.0) {
            return verdict(false, format!("tree seed {seed}: D = {:?}", r.get("D")));
        }
    }
    let mut ds = Vec::new();
    for radius in [3, 4, 5] {
        let ball = build_ball(&GroupSpec::FreeAbelian(2), radius).unwrap();
        let r = check_relative_rips(&ball.graph, &empty, 1.0, 2.0, &ball.graph.all_vertices(), Mode::Exhaustive);
        ds.push(r.get("D").unwrap());
    }
    let increasing = ds.windows(2).all(|w| w[0] < w[1]);
    verdict(increasing, format!("5 trees D = 0; grid balls r=3,4,5 D = {ds:?}"))
}

fn ac3() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let wanted: &[(&str, &[&str], &[(&str, &str)])] = &[
        ("alpha1", &["--K", "1"], &[("alpha1", "B")]),
        ("rh3", &["--mu", "1", "--R", "2,4"], &[("rh3-rips(R=2)", "D"), ("rh3-rips(R=4)", "D")]),
        ("rh1", &[], &[("rh1", "delta")]),
        ("rh2", &[], &[("rh2", "delta"), ("bcp", "K")]),
        (
            "proj",
            &[],
            &[("proj", "t"), ("proj", "R"), ("proj", "L"), ("proj", "R'"), ("proj", "C"), ("proj", "K")],
        ),
    ];
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, group, sub) in [("free2", "free2", "a"), ("free-product", FREE_PRODUCT, "ab")] {
        let mut worst = 0.0f64;
        for (check, extra, constants) in wanted {
            let out = dir.path().join(format!("{name}-{check}.json"));
            let mut args = vec!["check", check, "--group", group, "--subgroup", sub, "--radius", "4,5,6", "--out"];
            let out_s = out.to_str().unwrap().to_string();
            args.push(&out_s);
            args.extend_from_slice(extra);
            if cli(&args) == 2 {
                return verdict(false, format!("{name} {check}: configuration error"));
            }
            let series = csv_series(&out.with_extension("csv"));
            for (c, k) in *constants {
                let pts = &series[&(c.to_string(), k.to_string())];
                let step = (pts[2].1 - pts[1].1).abs();
                worst = worst.max(step);
                if step > STABLE_STEP {
                    pass = false;
                    lines.push(format!("{name} {c}:{k} {pts:?}"));
                }
            }
        }
        lines.push(format!("{name} largest r5->r6 change {worst}"));
    }
    verdict(pass, lines.join("; "))
}

fn ac4() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let mut flagged = Vec::new();
    let mut exits = Vec::new();
    for check in ["alpha1", "rh1", "bcp"] {
        let out = dir.path().join(format!("{check}.json"));
        let code = cli(&["check", check, "--group", "z2", "--subgroup", "a", "--radius", "4,5,6", "--out", out.to_str().unwrap()]);
        let rep = read_json(&out);
        let growing = rep["diagnostics"].as_array().unwrap().iter().any(|d| d.as_str().unwrap().starts_with("growing"));
        let witnesses = rep["results"].as_array().unwrap().iter().any(|r| r["violation"] == Value::Bool(true));
        if growing || witnesses {
            flagged.push(format!("{check}{}{}", if growing { " growing" } else { "" }, if witnesses { " witnesses" } else { "" }));
            exits.push(code);
        }
    }
    let pass = flagged.len() >= 2 && exits.iter().all(|&c| c == 1);
    verdict(pass, format!("flagged [{}], exit codes {exits:?}", flagged.join(", ")))
}

fn ac5() -> Verdict {
    let (ball, fam) = free_product(5);
    let g = &ball.graph;
    let pool = ball.interior(2);
    let params = TransientParams::new(1.0, 2.0);
    let bow = build_bowditch(g, &fam, &BowditchParams::default()).unwrap();
    let coned = build_coned_off(g, &fam, 1.0).unwrap();
    let (rh2, _) = check_rh2(&coned, &pool, &Rh2Params::default());
    let k = rh2.get("K").unwrap();
    let bound = k + params.c;
    let index = FamilyIndex::new(g, &fam, params.mu);
    let pairs = pool_pairs(&pool, Mode::Sampled { count: 100, seed: 5 }, "consistency");
    let mut worst = 0.0f64;
    let mut failures = 0;
    for &(x, y) in &pairs {
        let tc = trace_vs_transient(&bow, &index, x, y, &params).unwrap();
        let transient = VertexSet::new(tc.transient);
        let trace = VertexSet::new(tc.trace);
        let coned_vertices = VertexSet::new(geodesic(&coned.graph, x, y).vertices);
        let d = [
            hausdorff_distance(g, &transient, &trace).unwrap(),
            hausdorff_distance(g, &transient, &coned_vertices).unwrap(),
            hausdorff_distance(g, &trace, &coned_vertices).unwrap(),
        ];
        let m = d.iter().fold(0.0f64, |a, &b| a.max(b));
        worst = worst.max(m);
        if m > bound {
            failures += 1;
        }
    }
    verdict(
        failures == 0 && pairs.len() == 100,
        format!("{} pairs, largest Hausdorff distance {worst} <= K+R = {k}+{} ({failures} failures)", pairs.len(), params.c),
    )
}

fn ac6() -> Verdict {
    let gg = GGParams {
        cap: GG_CAP,
        ..GGParams::default()
    };
    let params = TransientParams::new(1.0, 2.0);
    let (ball, fam) = free_product(5);
    let pool = VertexSet::new(choose(ball.interior(1).as_slice(), 30, 7, "pool"));
    let good = gg_condition_audit(&ball.graph, &fam, &GGFamily::transient(&ball.graph, &fam, &pool, &params), &gg).unwrap();

    let r = 7;
    let (ball, fam) = free_product(r);
    let h = r / 2;
    let words = [
        "a".repeat(h) + &"b".repeat(h),
        "A".repeat(h) + &"B".repeat(h),
        "a".repeat(h) + &"B".repeat(h),
        "A".repeat(h) + &"b".repeat(h),
        "a".repeat(r),
        "A".repeat(r),
        "b".repeat(r),
        "B".repeat(r),
        "e".to_string(),
    ];
    let compass: Vec<Vertex> = words.iter().map(|w| ball.vertex_of(w).unwrap().unwrap()).collect();
    let hub = ball.vertex_of(&"c".repeat(r)).unwrap().unwrap();
    let pool = VertexSet::new(compass);
    let true_family = GGFamily::transient(&ball.graph, &fam, &pool, &params);
    let bad = gg_condition_audit(&ball.graph, &fam, &true_family.hub_corrupted(&ball.graph, hub), &gg).unwrap();
    let gg3 = bad.reports.iter().find(|r| r.check == "gg3").and_then(|r| r.get("D"));
    let pass = good.plausible && !bad.plausible && bad.failing.iter().any(|f| f.starts_with("gg3"));
    verdict(
        pass,
        format!(
            "transient family plausible={} failing={:?}; hub-corrupted plausible={} failing={:?} gg3 D={gg3:?}",
            good.plausible, good.failing, bad.plausible, bad.failing
        ),
    )
}

fn ac7() -> Verdict {
    let ball = build_ball(&GroupSpec::Free(2), 5).unwrap();
    let g = &ball.graph;
    let p = DivergenceParams::new(0.5, 0.0).unwrap();
    let n = g.vertex_count();
    let mut triples = 0;
    for a in 0..n {
        for b in a + 1..n {
            let path = geodesic(g, a, b);
            if path.len() < 3 {
                continue;
            }
            let mid = path.len() / 2;
            let centers = if path.len() % 2 == 1 { vec![path.vertices[mid]] } else { vec![path.vertices[mid - 1], path.vertices[mid]] };
            for c in centers {
                if !div_point(g, a, b, c, &p).unwrap().is_infinite() {
                    return verdict(false, format!("tree triple ({a},{b},{c}) has a finite detour"));
                }
                triples += 1;
            }
        }
    }

    let limits = BallLimits {
        max_radius: 12,
        ..BallLimits::default()
    };
    let grid = build_ball_with(&GroupSpec::FreeAbelian(2), 12, limits).unwrap();
    let pool = grid.interior(default_margin(12));
    let mode = Mode::Sampled { count: 4000, seed: 0 };
    let rep = div_function(&grid.graph, &pool, 8, &p, mode).unwrap();
    let fit = classify_growth(&rep.finite_points()).unwrap();
    let linear = fit.class == Growth::Linear && fit.exponential_residual >= EXP_RESIDUAL_RATIO * fit.linear_residual;

    let one_relator = build_ball(&GroupSpec::one_relator_model(), 6).unwrap();
    let (report, detours) = check_log_detour(&one_relator.graph, &one_relator.interior(1), 50, 0);
    let c = report.get("C").unwrap();
    let holds = detours.len() == 50 && detours.iter().all(|d| d.distance <= c * d.length.log2() + c + 1e-9);

    verdict(
        linear && holds,
        format!(
            "{triples} central tree triples infinite; grid r=12 {:?} residuals lin {:.3} exp {:.3}; {} detours with C = {c}",
            fit.class,
            fit.linear_residual,
            fit.exponential_residual,
            detours.len()
        ),
    )
}

fn ac8() -> Verdict {
    let empty = PeripheralFamily::empty();
    for seed in 0..50u64 {
        let g = random_tree(35, seed);
        let conf = Configuration::new(choose(g.all_vertices().as_slice(), 4, seed, "conf"), vec![]);
        let (t, e) = build_tree_graded_approx(&g, &empty, &conf, &TreeParams::default()).unwrap();
        if (e.c_mul, e.c_add) != (1, 0.0) || verify_tree_graded(&t) != TreeCheck::Pass {
            return verdict(false, format!("tree seed {seed}: C_mul {} C_add {}", e.c_mul, e.c_add));
        }
    }
    let (ball, fam) = free_product(5);
    let member = fam.members.iter().position(|m| m.len() > 4).unwrap();
    let pool = ball.interior(1);
    let (mut c_mul, mut c_add) = (0, 0.0f64);
    for seed in 0..20u64 {
        let conf = Configuration::new(choose(pool.as_slice(), 4, seed, "conf"), vec![member]);
        let (t, e) = match build_tree_graded_approx(&ball.graph, &fam, &conf, &TreeParams::default()) {
            Ok(r) => r,
            Err(err) => return verdict(false, format!("free product seed {seed}: {err}")),
        };
        if verify_tree_graded(&t) != TreeCheck::Pass {
            return verdict(false, format!("free product seed {seed}: axioms fail"));
        }
        c_mul = c_mul.max(e.c_mul);
        c_add = c_add.max(e.c_add);
    }
    verdict(
        c_mul <= TREE_C_MUL_MAX && c_add <= TREE_C_ADD_MAX,
        format!("50 trees C_mul=1 C_add=0; 20 free-product configurations C_mul <= {c_mul}, C_add <= {c_add}"),
    )
}

fn ac9() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let (graph, fam) = (d("g.txt"), d("fam.txt"));
    let fp = ["--group", FREE_PRODUCT, "--subgroup", "ab", "--radius", "4"];
    let z2 = ["--group", "z2", "--subgroup", "a", "--radius", "4,5"];
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("gen", ["gen", "--group", "free2", "--radius", "4", "--save", &graph].map(String::from).to_vec()),
        ("cosets", ["cosets", "--group", "free2", "--subgroup", "a", "--radius", "4", "--save", &fam].map(String::from).to_vec()),
        ("bowditch", [&["bowditch"][..], &fp, &["--save", &d("bow.txt")]].concat().iter().map(|s| s.to_string()).collect()),
        ("coneoff", [&["coneoff"][..], &fp, &["--save", &d("cone.txt")]].concat().iter().map(|s| s.to_string()).collect()),
        ("alpha1", ["check", "alpha1", "--graph", &graph, "--peripherals", &fam, "--K", "1"].map(String::from).to_vec()),
        ("alpha2", [&["check", "alpha2"][..], &fp].concat().iter().map(|s| s.to_string()).collect()),
        ("proj", [&["check", "proj", "--seed", "3"][..], &z2].concat().iter().map(|s| s.to_string()).collect()),
        ("rh0", [&["check", "rh0", "--mode", "sample(80)", "--seed", "2"][..], &fp].concat().iter().map(|s| s.to_string()).collect()),
        ("rh1", [&["check", "rh1"][..], &z2].concat().iter().map(|s| s.to_string()).collect()),
        ("rh2", [&["check", "rh2", "--seed", "4"][..], &fp].concat().iter().map(|s| s.to_string()).collect()),
        ("rh3", [&["check", "rh3", "--K", "3"][..], &z2].concat().iter().map(|s| s.to_string()).collect()),
        ("bcp", [&["check", "bcp"][..], &z2].concat().iter().map(|s| s.to_string()).collect()),
        ("gg", [&["check", "gg", "--pool-size", "12", "--seed", "9"][..], &fp].concat().iter().map(|s| s.to_string()).collect()),
        ("stability", [&["check", "stability", "--count", "40"][..], &fp].concat().iter().map(|s| s.to_string()).collect()),
        (
            "divergence",
            ["divergence", "--group", "z2", "--radius", "8", "--n-max", "5", "--log-detour", "10", "--seed", "1"].map(String::from).to_vec(),
        ),
        ("treeapprox", [&["treeapprox", "--random", "4", "--members", "0", "--seed", "6"][..], &fp, &["--save", &d("t.txt")]].concat().iter().map(|s| s.to_string()).collect()),
    ];
    let mut failed = Vec::new();
    for (name, mut args) in runs {
        let out = d(&format!("{name}.json"));
        args.extend(["--out".to_string(), out.clone()]);
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        if cli(&argv) == 2 {
            failed.push(format!("{name}: configuration error"));
            continue;
        }
        let again = d(&format!("{name}.replay.json"));
        if cli(&["replay", &out, "--out", &again]) != 0 {
            failed.push(format!("{name}: replay differs"));
        }
    }
    let tampered = d("tampered.json");
    let text = std::fs::read_to_string(d("rh1.json")).unwrap().replacen("\"violation\": false", "\"violation\": true", 1);
    std::fs::write(&tampered, text).unwrap();
    let control = cli(&["replay", &tampered]);
    if control != 1 {
        failed.push(format!("tampered report replays with exit {control}"));
    }
    verdict(failed.is_empty(), if failed.is_empty() { "16 subcommand reports replay identically; tampered report rejected".into() } else { failed.join("; ") })
}

fn main() {
    let criteria: [(&str, &str, fn() -> Verdict); 9] = [
        ("AC1", "horoball exactness", ac1),
        ("AC2", "hyperbolic degeneration", ac2),
        ("AC3", "positive example stabilization", ac3),
        ("AC4", "negative example detection", ac4),
        ("AC5", "transient-set consistency", ac5),
        ("AC6", "guessing-geodesics discrimination", ac6),
        ("AC7", "divergence baselines", ac7),
        ("AC8", "tree-graded approximation", ac8),
        ("AC9", "reproducibility", ac9),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (id, name, f) in criteria {
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failures += 1;
        }
        println!(
            "{id} {} {name}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
