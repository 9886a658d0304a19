use relhyp_demo::{alpha1_json, ball_summary_json, divergence_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn summary_counts_spheres() {
    let v = parse(ball_summary_json("free2", 3).unwrap());
    assert_eq!(v["vertices"], 53);
    assert_eq!(v["spheres"], serde_json::json!([1, 4, 12, 36]));
}

#[test]
fn alpha1_separates_axis_cosets_from_grid_lines() {
    let free = parse(alpha1_json("free2", 5, "a", 1.0).unwrap());
    assert_eq!(free["report"]["violation"], false);
    let grid = parse(alpha1_json("z2", 6, "a", 1.0).unwrap());
    assert_eq!(grid["report"]["violation"], true);
}

#[test]
fn grid_divergence_is_linear() {
    let v = parse(divergence_json("z2", 12, 8, 0).unwrap());
    assert_eq!(v["growth"], "linear");
    assert_eq!(v["divergence"]["records"].as_array().unwrap().len(), 8);
}

#[test]
fn bad_input_is_an_error_message() {
    assert!(ball_summary_json("free(", 3).unwrap_err().contains("line"));
    assert!(ball_summary_json("z2", 40).is_err());
}
