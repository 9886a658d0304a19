use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Result};
use relhyp::bowditch::{build_bowditch, check_rh1, BowditchParams, Rh1Params};
use relhyp::coned::{build_coned_off, check_rh2, BcpParams, Rh2Params};
use relhyp::divergence::{check_log_detour, classify_growth, default_margin, div_function, DivergenceParams};
use relhyp::metric::is_coarsely_connected;
use relhyp::peripherals::{audit_projection_lemmas, check_alpha1, check_alpha2, ProjectionParams, SampleParams};
use relhyp::sampling::choose;
use relhyp::transient::{
    check_relative_rips, check_rh0, check_rh3_cond2, check_transient_stability, default_triangle_mode, gg_condition_audit,
    sample_path_pairs, GGFamily, GGParams, TransientParams,
};
use relhyp::tree_approx::{build_tree_graded_approx, verify_tree_graded, Configuration, TreeCheck, TreeParams};
use relhyp::{ConstantsReport, GraphError, Mode};
use serde_json::{json, Value};

use crate::args::{BowArgs, Check, Cli, Command, ConedArgs, SpaceArgs};
use crate::output::{artifact_path, write_atomic, RunResult, Table};
use crate::space::{load, Space};

/// Radii needed before the growth diagnostic applies.
const GROWTH_MIN_RADII: usize = 3;
/// Least average increase per unit radius counted as growth.
const GROWTH_MIN_SLOPE: f64 = 0.5;

/// Everything a command produced, before timing.
pub struct Run {
    pub results: Vec<RunResult>,
    pub diagnostics: Vec<String>,
    pub table: Table,
}

impl Run {
    pub fn violation(&self) -> bool {
        self.results.iter().any(|r| r.violation) || self.diagnostics.iter().any(|d| d.starts_with("growing"))
    }
}

struct Outcome {
    payload: Value,
    violation: bool,
    /// `(check, constant, value)` rows for the CSV.
    rows: Vec<(String, String, f64)>,
}

impl Outcome {
    fn from_reports(payload: Value, reports: &[&ConstantsReport]) -> Self {
        Outcome {
            payload,
            violation: reports.iter().any(|r| r.violation),
            rows: reports.iter().flat_map(|r| rows_of(r)).collect(),
        }
    }
}

fn rows_of(r: &ConstantsReport) -> Vec<(String, String, f64)> {
    r.constants.iter().map(|(k, v)| (r.check.clone(), k.clone(), v.0)).collect()
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("payload serializes")
}

fn mode_or(cli: &Cli, default: Mode) -> Result<Mode> {
    match &cli.common.mode {
        Some(text) => Mode::parse(text, cli.common.seed).map_err(|e| anyhow!("--mode: {}", e.0)),
        None => Ok(default),
    }
}

/// Runs `cli` on each space of `space` and collects per-radius outcomes.
fn per_space(
    space: &SpaceArgs,
    seed: u64,
    margin: impl Fn(usize) -> usize,
    headline: &[&str],
    mut f: impl FnMut(&Space, bool) -> Result<Outcome>,
) -> Result<Run> {
    let spaces = load(space, seed, margin)?;
    let many = spaces.len() > 1;
    let mut results = Vec::new();
    let mut table = Table::new(&["radius", "check", "constant", "value"]);
    let mut series: BTreeMap<(String, String), Vec<(usize, f64)>> = BTreeMap::new();
    for s in &spaces {
        let o = f(s, many)?;
        let radius = s.radius.map(|r| r.to_string()).unwrap_or_default();
        for (check, constant, value) in &o.rows {
            table.rows.push(vec![radius.clone(), check.clone(), constant.clone(), value.to_string()]);
            if let Some(r) = s.radius {
                series.entry((check.clone(), constant.clone())).or_default().push((r, *value));
            }
        }
        results.push(RunResult {
            radius: s.radius,
            vertices: s.graph.vertex_count(),
            violation: o.violation,
            payload: o.payload,
        });
    }
    let diagnostics = growth_diagnostics(&series, headline, spaces.len());
    Ok(Run {
        results,
        diagnostics,
        table,
    })
}

/// A headline constant grows when it strictly increases at every radius
/// step with average slope at least [`GROWTH_MIN_SLOPE`].
fn growth_diagnostics(series: &BTreeMap<(String, String), Vec<(usize, f64)>>, headline: &[&str], runs: usize) -> Vec<String> {
    let mut out = Vec::new();
    if runs < GROWTH_MIN_RADII {
        return out;
    }
    for ((check, constant), pts) in series {
        if !headline.contains(&constant.as_str()) || pts.len() != runs {
            continue;
        }
        let values: Vec<String> = pts.iter().map(|(r, v)| format!("r={r}:{v}")).collect();
        let increasing = pts.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1);
        let (first, last) = (pts[0], pts[pts.len() - 1]);
        let slope = (last.1 - first.1) / (last.0 as f64 - first.0 as f64);
        if increasing && slope.is_finite() && slope >= GROWTH_MIN_SLOPE {
            out.push(format!("growing {check}:{constant} slope {slope:.3} ({})", values.join(", ")));
        } else {
            out.push(format!("stable {check}:{constant} ({})", values.join(", ")));
        }
    }
    out
}

fn save_artifact(save: &Option<PathBuf>, s: &Space, many: bool, text: impl FnOnce() -> String) -> Result<Option<String>> {
    match save {
        Some(path) => {
            let p = artifact_path(path, s.radius, many);
            write_atomic(&p, &text())?;
            Ok(Some(p.display().to_string()))
        }
        None => Ok(None),
    }
}

fn bowditch_params(b: &BowArgs, seed: u64) -> BowditchParams {
    BowditchParams {
        k: b.k,
        r: b.r_net,
        depth: b.depth,
        seed,
        ..BowditchParams::default()
    }
}

fn rh2_params(c: &ConedArgs, seed: u64) -> Rh2Params {
    Rh2Params {
        pairs: c.pairs,
        member_pairs: c.member_pairs,
        perturbations: c.perturbations,
        detour_mu: c.detour_mu,
        bcp: BcpParams {
            l_grid: c.l.clone(),
            fraction: c.fraction,
        },
        subsample: c.subsample,
        seed,
    }
}

const DEFAULT_MARGIN: usize = 2;

pub fn execute(cli: &Cli) -> Result<Run> {
    let seed = cli.common.seed;
    let margin = |_| DEFAULT_MARGIN;
    match &cli.command {
        Command::Gen { space, save } => per_space(space, seed, margin, &[], |s, many| {
            let mut spheres = Vec::new();
            if let Some(ball) = &s.ball {
                spheres = vec![0usize; ball.radius + 1];
                for &d in &ball.depth {
                    spheres[d] += 1;
                }
            }
            let saved = save_artifact(save, s, many, || s.graph.to_text())?;
            Ok(Outcome {
                payload: json!({
                    "group": s.ball.as_ref().map(|b| b.spec.to_string()),
                    "vertices": s.graph.vertex_count(),
                    "edges": s.graph.edge_count(),
                    "spheres": spheres,
                    "saved": saved,
                }),
                violation: false,
                rows: vec![("gen".into(), "vertices".into(), s.graph.vertex_count() as f64)],
            })
        }),
        Command::Cosets { space, k, save } => per_space(space, seed, margin, &[], |s, many| {
            let members: Vec<Value> = s
                .family
                .members
                .iter()
                .map(|m| json!({"size": m.len(), "connectivity": is_coarsely_connected(&s.graph, m, *k)}))
                .collect();
            let saved = save_artifact(save, s, many, || s.family.to_text())?;
            Ok(Outcome {
                payload: json!({"count": s.family.len(), "k": k, "members": members, "saved": saved}),
                violation: false,
                rows: vec![("cosets".into(), "count".into(), s.family.len() as f64)],
            })
        }),
        Command::Bowditch { space, bow, save } => per_space(space, seed, margin, &[], |s, many| {
            let b = build_bowditch(&s.graph, &s.family, &bowditch_params(bow, seed))?;
            let members: Vec<Value> = b
                .members
                .iter()
                .map(|m| json!({"net": m.approx.net.len(), "depth": m.depth()}))
                .collect();
            let saved = save_artifact(save, s, many, || b.to_text())?;
            Ok(Outcome {
                payload: json!({
                    "vertices": b.graph.vertex_count(),
                    "edges": b.graph.edge_count(),
                    "members": members,
                    "coarse_map": b.coarse_map,
                    "saved": saved,
                }),
                violation: false,
                rows: vec![("bowditch".into(), "vertices".into(), b.graph.vertex_count() as f64)],
            })
        }),
        Command::Coneoff { space, k, save } => per_space(space, seed, margin, &[], |s, many| {
            let c = build_coned_off(&s.graph, &s.family, *k)?;
            let nets: Vec<usize> = c.nets.iter().map(|n| n.len()).collect();
            let saved = save_artifact(save, s, many, || c.graph.to_text())?;
            Ok(Outcome {
                payload: json!({
                    "vertices": c.graph.vertex_count(),
                    "edges": c.graph.edge_count(),
                    "nets": nets,
                    "saved": saved,
                }),
                violation: false,
                rows: vec![("coneoff".into(), "edges".into(), c.graph.edge_count() as f64)],
            })
        }),
        Command::Check(check) => execute_check(cli, check),
        Command::Divergence {
            space,
            delta,
            gamma,
            closed,
            n_max,
            log_detour,
        } => {
            let mut params = DivergenceParams::new(*delta, *gamma)?;
            params.closed = *closed;
            let mut run = per_space(space, seed, default_margin, &[], |s, _| {
                let mode = mode_or(cli, default_triangle_mode(s.pool.len(), 4000, seed))?;
                let rep = div_function(&s.graph, &s.pool, *n_max, &params, mode)?;
                let growth = match classify_growth(&rep.finite_points()) {
                    Ok(fit) => to_value(&fit),
                    Err(e) => json!({ "inconclusive": e.to_string() }),
                };
                let mut violation = false;
                let detour = match log_detour {
                    Some(count) => {
                        let (report, detours) = check_log_detour(&s.graph, &s.pool, *count, seed);
                        violation = report.violation;
                        json!({"report": report, "detours": detours})
                    }
                    None => Value::Null,
                };
                let rows = rep
                    .records
                    .iter()
                    .map(|r| ("divergence".to_string(), format!("{}", r.n), r.sup.0))
                    .collect();
                Ok(Outcome {
                    payload: json!({"divergence": rep, "growth": growth, "log_detour": detour}),
                    violation,
                    rows,
                })
            })?;
            run.table = divergence_table(&run.results);
            Ok(run)
        }
        Command::Treeapprox {
            space,
            points,
            members,
            random,
            mu,
            c,
            net_k,
            tolerance,
            save,
        } => per_space(space, seed, margin, &[], |s, many| {
            let pts = match random {
                Some(k) => choose(s.pool.as_slice(), *k, seed, "treeapprox"),
                None => points.iter().map(|p| s.vertex(p)).collect::<Result<Vec<_>>>()?,
            };
            let conf = Configuration::new(pts, members.clone());
            let params = TreeParams {
                transient: TransientParams::new(*mu, *c),
                net_k: *net_k,
                tolerance: *tolerance,
                ..TreeParams::default()
            };
            match build_tree_graded_approx(&s.graph, &s.family, &conf, &params) {
                Ok((t, emb)) => {
                    let check = verify_tree_graded(&t);
                    let saved = save_artifact(save, s, many, || t.to_text())?;
                    Ok(Outcome {
                        violation: check != TreeCheck::Pass,
                        rows: vec![
                            ("treeapprox".into(), "c_mul".into(), emb.c_mul as f64),
                            ("treeapprox".into(), "c_add".into(), emb.c_add),
                            ("treeapprox".into(), "realization_error".into(), emb.realization_error),
                        ],
                        payload: json!({
                            "configuration": conf,
                            "vertices": t.graph.vertex_count(),
                            "pieces": t.pieces.len(),
                            "check": check,
                            "embedding": emb,
                            "saved": saved,
                        }),
                    })
                }
                Err(e @ GraphError::NotTreeLike(..)) => Ok(Outcome {
                    payload: json!({"configuration": conf, "not_tree_like": e.to_string()}),
                    violation: true,
                    rows: Vec::new(),
                }),
                Err(e) => Err(e.into()),
            }
        }),
        Command::Replay { .. } => bail!("replay is handled before execution"),
    }
}

fn divergence_table(results: &[RunResult]) -> Table {
    let mut t = Table::new(&["radius", "n", "div_sup", "infinite_count", "samples"]);
    for r in results {
        let radius = r.radius.map(|x| x.to_string()).unwrap_or_default();
        if let Some(records) = r.payload["divergence"]["records"].as_array() {
            for rec in records {
                let sup = match &rec["sup"] {
                    Value::Number(n) => n.to_string(),
                    other => other.as_str().unwrap_or("").to_string(),
                };
                t.rows.push(vec![
                    radius.clone(),
                    rec["n"].to_string(),
                    sup,
                    rec["infinite"].to_string(),
                    rec["samples"].to_string(),
                ]);
            }
        }
    }
    t
}

fn execute_check(cli: &Cli, check: &Check) -> Result<Run> {
    let seed = cli.common.seed;
    let margin = |_| DEFAULT_MARGIN;
    match check {
        Check::Alpha1 { space, k, fraction } => per_space(space, seed, margin, &["B"], |s, _| {
            let r = check_alpha1(&s.graph, &s.family, *k, *fraction);
            Ok(Outcome::from_reports(to_value(&r), &[&r]))
        }),
        Check::Alpha2 {
            space,
            epsilon,
            m,
            perturbations,
        } => per_space(space, seed, margin, &["M"], |s, _| {
            let mode = mode_or(cli, Mode::Sampled { count: 200, seed })?;
            let r = check_alpha2(&s.graph, &s.family, *epsilon, *m, &s.pool, mode, *perturbations);
            Ok(Outcome::from_reports(to_value(&r), &[&r]))
        }),
        Check::Proj {
            space,
            m,
            mu,
            l,
            perturbations,
        } => {
            let count = match mode_or(cli, Mode::Sampled { count: 200, seed })? {
                Mode::Sampled { count, .. } => count,
                Mode::Exhaustive => bail!("--mode: proj is sampled only"),
            };
            let params = ProjectionParams {
                m: *m,
                mu: *mu,
                l_grid: l.clone(),
                sample: SampleParams {
                    count,
                    seed,
                    perturbations: *perturbations,
                },
                ..ProjectionParams::default()
            };
            per_space(space, seed, margin, &["t", "R", "L", "R'", "C", "K"], |s, _| {
                let r = audit_projection_lemmas(&s.graph, &s.family, &s.pool, &params);
                Ok(Outcome::from_reports(to_value(&r), &[&r]))
            })
        }
        Check::Rh0 { space, sigma, delta } => per_space(space, seed, margin, &[], |s, _| {
            let mode = mode_or(cli, default_triangle_mode(s.pool.len(), 200, seed))?;
            let r = check_rh0(&s.graph, &s.family, *sigma, *delta, &s.pool, mode);
            Ok(Outcome::from_reports(to_value(&r), &[&r]))
        }),
        Check::Rh1 { space, bow, subsample } => per_space(space, seed, margin, &["delta"], |s, _| {
            let b = build_bowditch(&s.graph, &s.family, &bowditch_params(bow, seed))?;
            let mut params = Rh1Params {
                subsample: *subsample,
                seed,
                ..Rh1Params::default()
            };
            match mode_or(cli, Mode::Sampled { count: *subsample, seed })? {
                Mode::Exhaustive => params.exhaustive_up_to = usize::MAX,
                Mode::Sampled { count, .. } => params.subsample = count,
            }
            let r = check_rh1(&b, Some(&b.lift_pool(&s.pool)), &params);
            Ok(Outcome::from_reports(to_value(&r), &[&r]))
        }),
        Check::Rh2 { space, coned } | Check::Bcp { space, coned } => {
            let only_bcp = matches!(check, Check::Bcp { .. });
            let headline: &[&str] = if only_bcp { &["K"] } else { &["delta", "K"] };
            per_space(space, seed, margin, headline, |s, _| {
                let c = build_coned_off(&s.graph, &s.family, coned.k)?;
                let (rh2, bcp) = check_rh2(&c, &s.pool, &rh2_params(coned, seed));
                if only_bcp {
                    Ok(Outcome::from_reports(to_value(&bcp), &[&bcp.report]))
                } else {
                    Ok(Outcome::from_reports(json!({"rh2": rh2, "bcp": bcp}), &[&rh2, &bcp.report]))
                }
            })
        }
        Check::Rh3 { space, mu, r, k } => per_space(space, seed, margin, &["D", "K"], |s, _| {
            let mode = mode_or(cli, default_triangle_mode(s.pool.len(), 200, seed))?;
            let mut reports = Vec::new();
            for &radius in r {
                let mut rips = check_relative_rips(&s.graph, &s.family, *mu, radius, &s.pool, mode);
                rips.check = format!("rh3-rips(R={radius})");
                reports.push(rips);
                if let Some(k) = k {
                    let mut cond2 = check_rh3_cond2(&s.graph, &s.family, *mu, radius, *k, &s.pool, mode);
                    cond2.check = format!("rh3-cond2(R={radius})");
                    reports.push(cond2);
                }
            }
            let refs: Vec<&ConstantsReport> = reports.iter().collect();
            Ok(Outcome::from_reports(to_value(&reports), &refs))
        }),
        Check::Gg {
            space,
            mu,
            c,
            cap,
            alpha1_k,
            k_grid,
            hub,
        } => per_space(space, seed, margin, &[], |s, _| {
            let params = TransientParams::new(*mu, *c);
            let mut family = GGFamily::transient(&s.graph, &s.family, &s.pool, &params);
            if let Some(h) = hub {
                family = family.hub_corrupted(&s.graph, s.vertex(h)?);
            }
            let audit = gg_condition_audit(
                &s.graph,
                &s.family,
                &family,
                &GGParams {
                    cap: *cap,
                    alpha1_k: *alpha1_k,
                    k_grid: k_grid.clone(),
                },
            )?;
            let rows = audit.reports.iter().flat_map(rows_of).collect();
            Ok(Outcome {
                violation: !audit.plausible,
                payload: json!({"verdict": if audit.plausible { "plausible" } else { "not-plausible" }, "audit": audit}),
                rows,
            })
        }),
        Check::Stability {
            space,
            mu,
            c,
            count,
            slack,
        } => per_space(space, seed, margin, &["M"], |s, _| {
            let pairs = sample_path_pairs(&s.graph, &s.pool, *count, *slack, seed);
            let r = check_transient_stability(&s.graph, &s.family, &TransientParams::new(*mu, *c), &pairs)?;
            Ok(Outcome::from_reports(to_value(&r), &[&r]))
        }),
    }
}

/// Reads a report's echoed configuration.
pub fn config_of(path: &Path) -> Result<Cli> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow!("cannot read {}: {e}", path.display()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let config = value.get("config").ok_or_else(|| anyhow!("{}: no config echo", path.display()))?;
    Ok(serde_json::from_value(config.clone())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(pts: &[(usize, f64)]) -> BTreeMap<(String, String), Vec<(usize, f64)>> {
        BTreeMap::from([(("c".to_string(), "K".to_string()), pts.to_vec())])
    }

    #[test]
    fn growth_needs_strict_increase_and_slope() {
        let grows = growth_diagnostics(&series(&[(4, 2.0), (5, 3.0), (6, 3.5)]), &["K"], 3);
        assert!(grows[0].starts_with("growing c:K"));
        let flat_step = growth_diagnostics(&series(&[(4, 2.0), (5, 4.0), (6, 4.0)]), &["K"], 3);
        assert!(flat_step[0].starts_with("stable"));
        let slow = growth_diagnostics(&series(&[(4, 2.0), (5, 2.2), (6, 2.4)]), &["K"], 3);
        assert!(slow[0].starts_with("stable"));
        assert!(growth_diagnostics(&series(&[(4, 1.0), (5, 9.0)]), &["K"], 2).is_empty());
        assert!(growth_diagnostics(&series(&[(4, 1.0), (5, 2.0), (6, 3.0)]), &["B"], 3).is_empty());
    }
}
