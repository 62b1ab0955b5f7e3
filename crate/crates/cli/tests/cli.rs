use std::io::Write;
use std::process::{Command, Output};

use rigidflow_core::parse_report;

fn rigidflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rigidflow")).args(args).output().expect("run rigidflow")
}

fn scene_file(body: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

const ROTATING_WIDE: &str = r#"{
  "name": "rotating-wide",
  "dimension": 4,
  "coordinates": ["t", "x", "y", "z"],
  "metric": [["-1", "0", "0", "0"], [null, "1", "0", "0"], [null, null, "1", "0"], [null, null, null, "1"]],
  "flow": ["1", "-w*y", "w*x", "0"],
  "parameters": {"w": 0.5},
  "kappa": 0,
  "domain": {"min": [-1, -3, -3, -1], "max": [1, 3, 3, 1]}
}"#;

#[test]
fn models_lists_the_catalog() {
    let out = rigidflow(&["models"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["minkowski", "de_sitter", "anti_de_sitter", "einstein_static", "rotating", "fermi_rigid", "milne"] {
        assert!(text.lines().any(|l| l.split_whitespace().nth(1) == Some(name)), "{name}");
    }
    let json = rigidflow(&["models", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 10);
}

#[test]
fn analyze_rotating_model_instantiates_the_theorem() {
    let out = rigidflow(&[
        "analyze", "--model", "minkowski", "--flow", "rotating", "--flow-param", "omega=0.5", "--points",
        "random:30", "--seed", "42", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = parse_report(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert_eq!(report.theorem.conclusion.label(), "theorem-instantiated");
    assert_eq!(report.points.len(), 30);
    assert!(report.verdict("killing-direct").unwrap().pass);
}

#[test]
fn scene_file_points_outside_the_light_cylinder_are_excluded() {
    let f = scene_file(ROTATING_WIDE);
    let path = f.path().to_str().unwrap();
    let out = rigidflow(&["analyze", "--scene", path, "--points", "random:80", "--seed", "3", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = parse_report(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    assert!(!report.excluded.is_empty() && !report.points.is_empty());
    for e in &report.excluded {
        assert!(0.25 * (e.point[1] * e.point[1] + e.point[2] * e.point[2]) >= 1.0);
    }
    for p in &report.points {
        assert!(0.25 * (p.point[1] * p.point[1] + p.point[2] * p.point[2]) < 1.0);
    }
    assert!(report.verdict("born-rigidity").unwrap().pass);
}

#[test]
fn text_report_has_verdict_lines() {
    let out = rigidflow(&["theorem", "--model", "de_sitter", "--flow", "rotating", "--points", "grid:2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for criterion in ["born-rigidity", "rigid-isometry-curl", "rigid-isometry-rotation", "killing-direct"] {
        let line = text.lines().find(|l| l.starts_with(&format!("verdict {criterion} "))).unwrap();
        assert!(line.contains(" PASS "), "{line}");
    }
    assert!(text.contains("conclusion theorem-instantiated"));
    assert!(text.lines().any(|l| l.starts_with("convention rng:")));
}

#[test]
fn verify_runs_the_selected_suite() {
    let out = rigidflow(&[
        "verify", "--model", "anti_de_sitter", "--dim", "5", "--flow", "rotating", "--suite", "curvature", "--points",
        "random:10", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = parse_report(std::str::from_utf8(&out.stdout).unwrap()).unwrap();
    let names: Vec<&str> = report.identities.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["base_curvature_relation", "sectional_trace"]);
    assert!(report.identities.iter().all(|r| r.asserted && r.pass));
}

#[test]
fn static_flow_on_a_curved_slice_passes_every_asserted_check() {
    let doc = ROTATING_WIDE
        .replace(r#""kappa": 0,"#, "")
        .replace(r#""flow": ["1", "-w*y", "w*x", "0"]"#, r#""flow": ["1", "0", "0", "0"]"#)
        .replace(r#"[null, "1", "0", "0"]"#, r#"[null, "1 + x^2", "0", "0"]"#);
    let f = scene_file(&doc);
    let out = rigidflow(&["verify", "--scene", f.path().to_str().unwrap(), "--points", "random:10"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn counterexample_candidate_exits_one() {
    // A tolerance between the rigidity and Killing residuals of a slightly sheared flow.
    let out = rigidflow(&[
        "theorem", "--model", "de_sitter", "--flow", "perturbed_rotating", "--flow-param", "epsilon=0.02", "--tol",
        "0.0155", "--points", "random:20",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("conclusion counterexample-candidate"), "{text}");
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_and_schema_errors_exit_two() {
    assert_eq!(rigidflow(&["analyze"]).status.code(), Some(2));
    assert_eq!(rigidflow(&["analyze", "--model", "nope"]).status.code(), Some(2));
    assert_eq!(rigidflow(&["analyze", "--model", "minkowski", "--points", "sobol:3"]).status.code(), Some(2));
    assert_eq!(rigidflow(&["analyze", "--model", "minkowski", "--points", "random:0"]).status.code(), Some(2));
    assert_eq!(
        rigidflow(&["analyze", "--model", "minkowski", "--flow", "rotating", "--flow-param", "omega=99"])
            .status
            .code(),
        Some(2)
    );
    let mismatch = ROTATING_WIDE.replace(r#"[null, "1", "0", "0"]"#, r#"["1", "1", "0", "0"]"#);
    let f = scene_file(&mismatch);
    let out = rigidflow(&["analyze", "--scene", f.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("metric[1][0]"));
    let bad_flow = ROTATING_WIDE.replace(r#""flow": ["1", "-w*y", "w*x", "0"]"#, r#""flow": ["1"]"#);
    let f = scene_file(&bad_flow);
    assert_eq!(rigidflow(&["analyze", "--scene", f.path().to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn scene_level_numerical_failure_exits_three() {
    let degenerate = ROTATING_WIDE.replace(r#"[null, "1", "0", "0"]"#, r#"[null, "0", "0", "0"]"#);
    let f = scene_file(&degenerate);
    let out = rigidflow(&["analyze", "--scene", f.path().to_str().unwrap(), "--points", "random:5"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
