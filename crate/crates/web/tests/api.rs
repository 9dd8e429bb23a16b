use serde_json::Value;
use shiftshap_web::{gaussian_curve_json, shapley_table_json, simulate_json};

fn parse(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn curve_matches_closed_form_endpoints() {
    let out = gaussian_curve_json(
        r#"{"mu1": 1, "mu2": 0.5, "theta1": 1, "theta2": 0, "sigma_x2": 0.5, "sigma_y2": 0.25,
            "phi": 0.9, "theta2_min": 0.5, "theta2_max": 1.5, "steps": 11}"#,
    )
    .unwrap();
    let points = parse(&out);
    let points = points.as_array().unwrap();
    assert_eq!(points.len(), 11);
    let first = &points[0];
    assert_eq!(first["theta2"], 0.5);
    assert!((first["attr_x"].as_f64().unwrap() + 0.06375).abs() < 1e-15);
    assert!((first["attr_y_given_x"].as_f64().unwrap() - 0.16875).abs() < 1e-15);
    for p in points {
        let sum = p["attr_x"].as_f64().unwrap() + p["attr_y_given_x"].as_f64().unwrap();
        assert!((sum - p["delta"].as_f64().unwrap()).abs() < 1e-12);
    }
}

#[test]
fn curve_defaults_and_errors() {
    let out = gaussian_curve_json(r#"{"theta2_min": 0, "theta2_max": 2, "steps": 3}"#).unwrap();
    assert_eq!(parse(&out).as_array().unwrap().len(), 3);
    assert!(gaussian_curve_json(r#"{"theta2_min": 2, "theta2_max": 0, "steps": 3}"#).is_err());
    assert!(gaussian_curve_json(r#"{"theta2_min": 0, "theta2_max": 2, "steps": 1}"#).is_err());
    let bad = r#"{"sigma_x2": -1, "theta2_min": 0, "theta2_max": 2, "steps": 3}"#;
    assert!(gaussian_curve_json(bad).unwrap_err().contains("variances"));
    assert!(gaussian_curve_json("nope").is_err());
}

#[test]
fn shapley_table_reports_exact_and_sampled() {
    let out = shapley_table_json(
        r#"{"players": ["a", "b"], "values": [0, 1, 2, 4], "permutations": 50, "seed": 3}"#,
    )
    .unwrap();
    let v = parse(&out);
    assert_eq!(floats(&v["exact"]), vec![1.5, 2.5]);
    let sampled = floats(&v["sampled"]);
    assert!((sampled.iter().sum::<f64>() - 4.0).abs() < 1e-12);
    assert_eq!(v["total"], 4.0);
    assert_eq!(out, shapley_table_json(
        r#"{"players": ["a", "b"], "values": [0, 1, 2, 4], "permutations": 50, "seed": 3}"#,
    )
    .unwrap());
}

#[test]
fn shapley_table_rejects_bad_tables() {
    assert!(shapley_table_json(r#"{"players": ["a"], "values": [1, 2]}"#).is_err());
    assert!(shapley_table_json(r#"{"players": ["a", "b"], "values": [0, 1, 2]}"#).is_err());
    assert!(shapley_table_json(r#"{"players": [], "values": [0]}"#).is_err());
}

#[test]
fn simulation_is_efficient_and_near_truth() {
    let out = simulate_json(r#"{"mu2": 0.5, "theta2": 1.3, "n": 6000, "seed": 2}"#).unwrap();
    let v = parse(&out);
    let est = floats(&v["estimated"]);
    let exact = floats(&v["exact"]);
    assert!(v["residual"].as_f64().unwrap().abs() < 1e-12);
    for (e, x) in est.iter().zip(&exact) {
        assert!((e - x).abs() < 0.06, "{est:?} vs {exact:?}");
    }
    let reversed = parse(&simulate_json(r#"{"n": 500, "reverse_graph": true, "logistic": true}"#).unwrap());
    assert!(reversed["exact"].is_null());
    assert_eq!(reversed["mechanisms"][0], "Y");
    assert!(simulate_json(r#"{"n": 50}"#).is_err());
}
