//! End-to-end checks of the command-line binary: exit codes, JSON schema,
//! and byte-identical reruns.

use std::process::{Command, Output};

fn critrel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critrel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn analyze_fixture_and_exit_codes() {
    let out = critrel(&["analyze", "chebyshev2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "analyze");
    assert_eq!(v["results"]["nu"], 1);
    let orbit = &v["results"]["orbits"][0];
    assert_eq!(orbit[1], serde_json::json!([-2.0, 0.0]));
    assert_eq!(orbit[2], serde_json::json!([2.0, 0.0]));
    assert_eq!(orbit[3], serde_json::json!([2.0, 0.0]));
}

#[test]
fn analyze_symbolic_diagram() {
    let out = critrel(&["analyze", "fig1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["results"]["nu"], 9);
    assert_eq!(v["results"]["zeta"], 3);
}

#[test]
fn malformed_input_exits_two() {
    let out = critrel(&["analyze", "{\"numerator\": oops"]);
    assert_eq!(out.status.code(), Some(2));
    let out = critrel(&["analyze", "no_such_fixture"]);
    assert_eq!(out.status.code(), Some(2));
    // degree below two is unusable
    let out = critrel(&["analyze", r#"{"numerator": [[1.0,0.0],[1.0,0.0]]}"#]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn relations_on_fixtures() {
    let out = critrel(&["relations", "chebyshev2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(
        v["results"]["proper_collection"],
        serde_json::json!([[1, 1, 3, 2]])
    );
    assert_eq!(v["results"]["flags"]["proper"], serde_json::json!(true));

    let out = critrel(&["relations", "fig1"]);
    let v = json_of(&out);
    assert_eq!(
        v["results"]["proper_collection"].as_array().unwrap().len(),
        6
    );
    assert_eq!(v["results"]["zeta"], 3);

    // an escaping quadratic has no relations; zeta = 1 definitively
    let out = critrel(&[
        "relations",
        r#"{"numerator": [[0.3,0.0],[0.0,0.0],[1.0,0.0]]}"#,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["results"]["proper_collection"], serde_json::json!([]));
    assert_eq!(v["results"]["zeta"], 1);
    assert_eq!(v["results"]["flags"]["definitive"], serde_json::json!(true));
}

#[test]
fn certify_exit_codes_match_rank_decisions() {
    assert_eq!(critrel(&["certify", "chebyshev2"]).status.code(), Some(0));
    assert_eq!(
        critrel(&["certify", "misiurewicz_i"]).status.code(),
        Some(0)
    );
    let out = critrel(&["certify", "lattes:a=2+0i"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json_of(&out);
    assert_eq!(v["results"]["certified"], serde_json::json!(false));
    assert!(!v["results"]["kernel_vectors"]
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn certify_with_sigma_and_charts() {
    let out = critrel(&[
        "certify",
        "chebyshev2",
        "--chart",
        "family:const",
        "--sigma",
        "1;1;0;1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["results"]["jacobian"]["rank"], 1);
    assert_eq!(v["results"]["sigma_rank"], 1);
    let entry = &v["results"]["jacobian"]["matrix"][0][0];
    assert!((entry[0].as_f64().unwrap() - -8.0).abs() < 1e-6);

    // polynomial charts reject rational maps
    let out = critrel(&["certify", "lattes:a=2+0i", "--chart", "poly"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pushforward_residuals() {
    let out = critrel(&["pushforward", "chebyshev2", "--relation", "1,1,3,2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert!(v["results"]["invariance_residual"].as_f64().unwrap() >= 0.1);
    // polynomial maps keep their own critical indexing
    assert_eq!(v["results"]["conjugated"], serde_json::json!(false));

    let out = critrel(&["pushforward", "chebyshev2", "--relation", "1,1,1,1"]);
    let v = json_of(&out);
    assert_eq!(v["results"]["zero"], serde_json::json!(true));
}

#[test]
fn lattes_demo_summary() {
    let out = critrel(&["lattes-demo", "--a", "2+0.5i"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["results"]["expected_rank"], 6);
    assert_eq!(v["results"]["jacobian"]["rank"], 5);
    assert!(v["results"]["invariance_residual"].as_f64().unwrap() <= 1e-5);
    assert_eq!(
        v["results"]["family_direction_in_kernel"],
        serde_json::json!(true)
    );
}

#[test]
fn deficit_check_passes_on_polynomial_fixtures() {
    for fixture in ["chebyshev2", "misiurewicz_i"] {
        let out = critrel(&["deficit-check", fixture]);
        assert_eq!(out.status.code(), Some(0), "{fixture}");
        let v = json_of(&out);
        assert!(v["results"]["max_mismatch"].as_f64().unwrap() <= 1e-5);
    }
    // rational maps are rejected for this chart
    let out = critrel(&["deficit-check", "lattes:a=2+0i"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_across_reruns() {
    for args in [
        vec!["certify", "misiurewicz_i", "--seed", "9"],
        vec![
            "pushforward",
            "chebyshev2",
            "--relation",
            "1,1,3,2",
            "--seed",
            "5",
        ],
        vec!["lattes-demo", "--a", "2", "--seed", "3"],
    ] {
        let first = critrel(&args);
        let second = critrel(&args);
        assert_eq!(first.stdout, second.stdout, "args {args:?}");
    }
}

#[test]
fn pretty_output_is_text() {
    let out = critrel(&["analyze", "chebyshev2", "--pretty"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("command:"));
    assert!(text.contains("wall_time_ms:"));
}
