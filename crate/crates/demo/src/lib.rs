//! Browser bindings: Cayley ball summaries, the bounded-intersection audit
//! and divergence curves, each returned as JSON text.

use relhyp::cayley::{build_ball_with, peripheral_cosets, BallLimits, CayleyBall, CosetSpec, GroupSpec};
use relhyp::divergence::{classify_growth, default_margin, div_function, DivergenceParams};
use relhyp::peripherals::check_alpha1;
use relhyp::transient::default_triangle_mode;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Keeps page computations interactive.
pub const MAX_VERTICES: usize = 20_000;
pub const MAX_RADIUS: usize = 12;

fn ball(group: &str, radius: usize) -> Result<CayleyBall, String> {
    let spec = GroupSpec::parse(group).map_err(|e| e.to_string())?;
    let limits = BallLimits {
        max_radius: MAX_RADIUS,
        max_vertices: MAX_VERTICES,
    };
    build_ball_with(&spec, radius, limits).map_err(|e| e.to_string())
}

pub fn ball_summary_json(group: &str, radius: usize) -> Result<String, String> {
    let b = ball(group, radius)?;
    let mut spheres = vec![0usize; b.radius + 1];
    for &d in &b.depth {
        spheres[d] += 1;
    }
    Ok(json!({
        "group": b.spec.to_string(),
        "vertices": b.graph.vertex_count(),
        "edges": b.graph.edge_count(),
        "spheres": spheres,
    })
    .to_string())
}

pub fn alpha1_json(group: &str, radius: usize, subgroup: &str, k: f64) -> Result<String, String> {
    let b = ball(group, radius)?;
    let spec = CosetSpec::generated_by(subgroup, b.generators()).map_err(|e| e.to_string())?;
    let fam = peripheral_cosets(&b, &[spec], 3).map_err(|e| e.to_string())?;
    let report = check_alpha1(&b.graph, &fam, k, 0.5);
    Ok(json!({"members": fam.len(), "report": report}).to_string())
}

pub fn divergence_json(group: &str, radius: usize, n_max: usize, seed: u64) -> Result<String, String> {
    let b = ball(group, radius)?;
    let pool = b.interior(default_margin(radius));
    let params = DivergenceParams::new(0.5, 0.0).map_err(|e| e.to_string())?;
    let mode = default_triangle_mode(pool.len(), 1500, seed);
    let rep = div_function(&b.graph, &pool, n_max, &params, mode).map_err(|e| e.to_string())?;
    let growth = classify_growth(&rep.finite_points()).ok().map(|f| f.class);
    Ok(json!({"divergence": rep, "growth": growth}).to_string())
}

/// Vertex, edge and sphere counts of the ball of `radius` in `group`.
#[wasm_bindgen]
pub fn ball_summary(group: &str, radius: usize) -> Result<String, JsError> {
    ball_summary_json(group, radius).map_err(|e| JsError::new(&e))
}

/// Bounded-intersection constant of the cosets of the subgroup generated by
/// the letters of `subgroup`.
#[wasm_bindgen]
pub fn alpha1(group: &str, radius: usize, subgroup: &str, k: f64) -> Result<String, JsError> {
    alpha1_json(group, radius, subgroup, k).map_err(|e| JsError::new(&e))
}

/// Divergence values for `n = 1..=n_max` with a growth classification.
#[wasm_bindgen]
pub fn divergence(group: &str, radius: usize, n_max: usize, seed: u64) -> Result<String, JsError> {
    divergence_json(group, radius, n_max, seed).map_err(|e| JsError::new(&e))
}
