use latemask_wasm::{heatmap_json, sweep_curve_json, term_weights_json};
use serde_json::Value;

#[test]
fn heatmap_is_square_over_positions() {
    let v: Value =
        serde_json::from_str(&heatmap_json("what is late interaction", 20, 42).unwrap()).unwrap();
    let labels = v["labels"].as_array().unwrap();
    assert_eq!(labels.len(), 20);
    assert_eq!(labels[2], "what");
    assert_eq!(labels[19], "[MASK]");
    assert_eq!(v["values"].as_array().unwrap().len(), 20);
    assert_eq!(v["columns"].as_array().unwrap().len(), 7);
}

#[test]
fn term_weights_sum_to_query_length() {
    let v: Value = serde_json::from_str(
        &term_weights_json("dense retrieval models", 10, "mask-to-all", 42).unwrap(),
    )
    .unwrap();
    let total: u64 = v
        .as_array()
        .unwrap()
        .iter()
        .map(|w| w["weight"].as_u64().unwrap())
        .sum();
    assert_eq!(total, 6 + 10);
    assert!(term_weights_json("a b", 3, "none", 42).is_err());
    assert!(term_weights_json("a b", 3, "sideways", 42).is_err());
}

#[test]
fn sweep_curve_has_one_point_per_count_and_metric() {
    let v: Value = serde_json::from_str(&sweep_curve_json(80, 8, 8, 4, 7).unwrap()).unwrap();
    let points = v.as_array().unwrap();
    assert_eq!(points.len(), 3 * 4);
    for p in points {
        let m = p["mean"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&m));
    }
    assert_eq!(
        sweep_curve_json(80, 8, 8, 4, 7).unwrap(),
        sweep_curve_json(80, 8, 8, 4, 7).unwrap()
    );
}
