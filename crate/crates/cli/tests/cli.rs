//! End-to-end runs of the rsos binary: report contents, exit codes, and
//! determinism of seeded output.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_rsos")
}

fn write_temp(name: &str, contents: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("rsos-cli-{}-{}", std::process::id(), name));
    std::fs::write(&path, contents).unwrap();
    path
}

fn temp_path(name: &str) -> PathBuf {
    let mut path = std::env::temp_dir();
    path.push(format!("rsos-cli-{}-{}", std::process::id(), name));
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited")
}

const TRIG_L1: &str = r#"
  "model": {
    "length": 1,
    "trigonometric": true,
    "gamma": [0.41, 0.0],
    "zeta": [0.63, 0.0],
    "theta": [0.87, 0.0],
    "mu": [[0.23, 0.0]]
  }"#;

#[test]
fn eval_routes_agree_at_fixed_point() {
    let config = write_temp(
        "eval-agree.json",
        &format!(
            r#"{{{TRIG_L1},
  "point": {{ "lambda": [[0.35, 0.1]] }},
  "routes": ["a", "s", "t", "c"]
}}"#
        ),
    );
    let out = run(&["eval", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("\"agree\": true"), "report: {text}");
    assert!(text.contains("\"seed\": 42"), "report: {text}");
    assert!(text.contains("\"route\": \"contour\""), "report: {text}");
    assert!(!text.contains("inf") && !text.to_lowercase().contains("nan"));
}

#[test]
fn eval_samples_several_points() {
    let config = write_temp(
        "eval-sample.json",
        &format!(
            r#"{{{TRIG_L1},
  "sample": {{ "count": 3, "seed": 11 }}
}}"#
        ),
    );
    let out = run(&["eval", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("\"seed\": 11"), "report: {text}");
    assert_eq!(text.matches("\"omega\"").count(), 3, "report: {text}");
}

#[test]
fn eval_names_the_failing_guard() {
    let config = write_temp(
        "eval-degenerate.json",
        &format!(
            r#"{{{TRIG_L1},
  "point": {{ "lambda": [[0.23, 0.0]] }}
}}"#
        ),
    );
    let out = run(&["eval", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    let msg = stderr(&out);
    assert!(msg.contains("lambda[0]-mu[0]"), "stderr: {msg}");
}

#[test]
fn oversized_contour_request_is_a_config_error() {
    let config = write_temp(
        "eval-oversized.json",
        r#"{
  "model": {
    "length": 4,
    "trigonometric": true,
    "gamma": [0.41, 0.0],
    "zeta": [0.63, 0.0],
    "theta": [0.87, 0.0],
    "mu": [[0.23, 0.0], [0.37, 0.02], [0.52, -0.03], [0.68, 0.01]]
  },
  "point": { "lambda": [[0.35, 0.1], [0.45, -0.08], [0.55, 0.06], [0.65, -0.04]] },
  "routes": ["a", "c"]
}"#,
    );
    let out = run(&["eval", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let msg = stderr(&out);
    assert!(msg.contains("supports chain length <= 3"), "stderr: {msg}");
}

#[test]
fn unknown_route_is_a_config_error() {
    let config = write_temp(
        "eval-unknown-route.json",
        &format!(
            r#"{{{TRIG_L1},
  "point": {{ "lambda": [[0.35, 0.1]] }}
}}"#
        ),
    );
    let out = run(&["eval", "--config", config.to_str().unwrap(), "--routes", "bogus"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("unknown route"), "stderr: {}", stderr(&out));
}

#[test]
fn unknown_config_key_is_rejected() {
    let config = write_temp(
        "eval-typo.json",
        &format!(
            r#"{{{TRIG_L1},
  "piont": {{ "lambda": [[0.35, 0.1]] }}
}}"#
        ),
    );
    let out = run(&["eval", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("piont"), "stderr: {}", stderr(&out));
}

#[test]
fn verify_is_deterministic_and_passes() {
    let config = write_temp(
        "verify-small.json",
        r#"{
  "verify": { "max_length": 2, "draws": 2 },
  "suites": ["theta", "weights"]
}"#,
    );
    let out_a = temp_path("verify-a.json");
    let out_b = temp_path("verify-b.json");
    for path in [&out_a, &out_b] {
        let out = run(&[
            "verify",
            "--config",
            config.to_str().unwrap(),
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    }
    let text_a = std::fs::read(&out_a).unwrap();
    let text_b = std::fs::read(&out_b).unwrap();
    assert_eq!(text_a, text_b, "seeded verify reruns must be byte-identical");
    let text = String::from_utf8(text_a).unwrap();
    assert!(text.contains("\"pass\": true"), "report: {text}");
    assert!(text.contains("\"suite\": \"theta\""), "report: {text}");
}

#[test]
fn verify_failure_exits_five_and_still_writes_the_report() {
    let out_path = temp_path("verify-fail.json");
    let out = run(&[
        "verify",
        "--suites",
        "theta",
        "--tol",
        "1e-30",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 5);
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("\"pass\": false"), "report: {text}");
}

#[test]
fn unknown_suite_is_a_config_error() {
    let out = run(&["verify", "--suites", "nonsense"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("unknown suite"), "stderr: {}", stderr(&out));
}

#[test]
fn scan_marks_degenerate_rows_and_keeps_the_grid() {
    let config = write_temp(
        "scan-degenerate.json",
        &format!(
            r#"{{{TRIG_L1},
  "point": {{ "lambda": [[0.35, 0.1]] }},
  "scan": {{
    "axes": [
      {{ "parameter": "lambda[0]", "start": [0.13, 0.0], "stop": [0.33, 0.0], "steps": 5 }}
    ]
  }}
}}"#
        ),
    );
    let out = run(&["scan", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6, "header plus five rows: {text}");
    assert!(lines[0].starts_with("index,lambda[0]_re,lambda[0]_im,"));
    assert!(lines[3].contains("degenerate"), "row: {}", lines[3]);
    assert!(lines[3].contains("lambda[0]-mu[0]"), "row: {}", lines[3]);
    assert_eq!(text.matches(",ok,").count(), 3, "table: {text}");
    assert!(!text.contains("inf") && !text.to_lowercase().contains("nan"));
}

#[test]
fn scan_normalized_value_stays_bounded_across_the_boundary_pole() {
    let config = write_temp(
        "scan-pole.json",
        &format!(
            r#"{{{TRIG_L1},
  "point": {{ "lambda": [[0.35, 0.1]] }},
  "scan": {{
    "axes": [
      {{ "parameter": "lambda[0]", "start": [-1.52, 0.0], "stop": [-1.48, 0.0], "steps": 5 }}
    ]
  }}
}}"#
        ),
    );
    let out = run(&["scan", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 5);
    // The exact pole at lambda = -theta - zeta is a named guard failure.
    assert_eq!(rows[2][7], "degenerate");
    assert!(rows[2][8].contains("theta+zeta+lambda"), "row: {:?}", rows[2]);
    // Z itself blows up approaching the pole while the normalized value
    // (Z times the boundary bracket product) stays of order one.
    for &i in &[0usize, 1, 3, 4] {
        let z_abs: f64 = rows[i][5].parse().unwrap();
        let zbar_abs: f64 = rows[i][6].parse().unwrap();
        assert!(z_abs > 50.0, "row {i} z_abs {z_abs}");
        assert!(zbar_abs.is_finite() && zbar_abs < 10.0, "row {i} zbar {zbar_abs}");
    }
    let near: f64 = rows[1][5].parse().unwrap();
    let far: f64 = rows[0][5].parse().unwrap();
    assert!(near > 1.5 * far, "|Z| must grow toward the pole");
}

#[test]
fn scan_empty_grid_emits_header_only() {
    let config = write_temp(
        "scan-empty.json",
        &format!(
            r#"{{{TRIG_L1},
  "point": {{ "lambda": [[0.35, 0.1]] }},
  "scan": {{
    "axes": [
      {{ "parameter": "theta", "start": [0.8, 0.0], "stop": [0.9, 0.0], "steps": 0 }}
    ]
  }}
}}"#
        ),
    );
    let out = run(&["scan", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1, "table: {text}");
    assert!(text.starts_with("index,theta_re,theta_im,"));
}

#[test]
fn scan_without_axes_is_a_config_error() {
    let config = write_temp(
        "scan-no-axes.json",
        &format!(
            r#"{{{TRIG_L1},
  "point": {{ "lambda": [[0.35, 0.1]] }},
  "scan": {{ "axes": [] }}
}}"#
        ),
    );
    let out = run(&["scan", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("1 or 2 axes"), "stderr: {}", stderr(&out));
}

#[test]
fn scan_two_axes_back_json_rows_in_row_major_order() {
    let config = write_temp(
        "scan-2d.json",
        &format!(
            r#"{{{TRIG_L1},
  "point": {{ "lambda": [[0.35, 0.1]] }},
  "scan": {{
    "axes": [
      {{ "parameter": "theta", "start": [0.8, 0.0], "stop": [0.9, 0.0], "steps": 2 }},
      {{ "parameter": "zeta", "start": [0.6, 0.0], "stop": [0.7, 0.0], "steps": 3 }}
    ]
  }},
  "output": {{ "format": "json" }}
}}"#
        ),
    );
    let out = run(&["scan", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = value["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    // First axis is the outer loop: zeta cycles within one theta block.
    let theta_re = |row: &serde_json::Value| -> f64 {
        row["theta"][0].as_str().unwrap().parse().unwrap()
    };
    assert_eq!(theta_re(&rows[0]), theta_re(&rows[2]));
    assert!(theta_re(&rows[3]) > theta_re(&rows[2]));
    for row in rows {
        assert_eq!(row["status"], "ok");
    }
}
