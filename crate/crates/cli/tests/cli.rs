//! End-to-end CLI tests: exit codes, golden bytes, determinism.

use assert_cmd::Command;
use std::path::PathBuf;

fn qrw2d() -> Command {
    Command::cargo_bin("qrw2d").unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("qrw2d-test-{}-{}", std::process::id(), name));
    p
}

#[test]
fn simulate_zero_steps_golden_csv_and_pgm() {
    let out = tmp("delta");
    qrw2d()
        .args([
            "simulate",
            "--model",
            r#"{"family":"grover"}"#,
            "--n",
            "0",
            "--out",
        ])
        .arg(&out)
        .args(["--format", "both", "--scale", "linear"])
        .assert()
        .success();
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert_eq!(csv, "r,s,p\n0,0,1\n");
    let pgm = std::fs::read(out.with_extension("pgm")).unwrap();
    assert_eq!(pgm, b"P5\n1 1\n65535\n\xff\xff");
}

#[test]
fn simulate_is_byte_deterministic() {
    let out1 = tmp("det1");
    let out2 = tmp("det2");
    for out in [&out1, &out2] {
        qrw2d()
            .args([
                "simulate",
                "--model",
                r#"{"family":"B","t":0.5}"#,
                "--n",
                "40",
                "--out",
            ])
            .arg(out)
            .args(["--format", "both", "--scale", "log"])
            .assert()
            .success();
    }
    assert_eq!(
        std::fs::read(out1.with_extension("csv")).unwrap(),
        std::fs::read(out2.with_extension("csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(out1.with_extension("pgm")).unwrap(),
        std::fs::read(out2.with_extension("pgm")).unwrap()
    );
}

#[test]
fn one_step_csv_matches_hand_amplitudes() {
    // One S(1/2) step from e1 puts probability 1/4 on each neighbor.
    let out = tmp("onestep");
    qrw2d()
        .args([
            "simulate",
            "--model",
            r#"{"family":"S","t":0.5}"#,
            "--n",
            "1",
            "--out",
        ])
        .arg(&out)
        .args(["--format", "csv"])
        .assert()
        .success();
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    assert_eq!(csv, "r,s,p\n-1,0,0.25\n0,-1,0.25\n0,1,0.25\n1,0,0.25\n");
}

#[test]
fn unknown_descriptor_field_is_config_error() {
    qrw2d()
        .args([
            "simulate",
            "--model",
            r#"{"family":"S","t":0.5,"seed":1}"#,
            "--n",
            "1",
            "--out",
            "/tmp/never",
        ])
        .assert()
        .failure()
        .code(2);
}

#[test]
fn out_of_range_parameter_is_config_error() {
    qrw2d()
        .args([
            "shape",
            "--model",
            r#"{"family":"A","t":0.8}"#,
            "--out",
            "/tmp/never",
        ])
        .assert()
        .failure()
        .code(2);
}

#[test]
fn bad_tolerance_name_is_config_error() {
    qrw2d()
        .args([
            "shape",
            "--model",
            r#"{"family":"S","t":0.5}"#,
            "--tol",
            "no_such=1",
            "--out",
            "/tmp/never",
        ])
        .assert()
        .failure()
        .code(2);
}

#[test]
fn bad_start_vector_is_config_error() {
    qrw2d()
        .args([
            "simulate",
            "--model",
            r#"{"family":"S","t":0.5}"#,
            "--start",
            "1,0,0",
            "--n",
            "1",
            "--out",
            "/tmp/never",
        ])
        .assert()
        .failure()
        .code(2);
}

#[test]
fn shape_writes_cloud_and_density() {
    let out = tmp("shape");
    qrw2d()
        .args([
            "shape",
            "--model",
            r#"{"family":"S","t":0.125}"#,
            "--grid",
            "10",
            "--pixels",
            "64",
            "--out",
        ])
        .arg(&out)
        .assert()
        .success();
    let csv = std::fs::read_to_string(out.with_extension("csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "alpha,beta,sheet,gamma,v1,v2,K");
    assert_eq!(lines.len(), 1 + 10 * 10 * 4);
    let pgm = std::fs::read(out.with_extension("pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n64 64\n65535\n"));
    assert_eq!(pgm.len(), b"P5\n64 64\n65535\n".len() + 64 * 64 * 2);
}

#[test]
fn check_passes_on_s_half() {
    qrw2d()
        .args([
            "check",
            "--model",
            r#"{"family":"S","t":0.5}"#,
            "--samples",
            "300",
        ])
        .assert()
        .success()
        .stdout(predicates::str::contains("OK:"))
        .stdout(predicates::str::contains("sqrt(t)/sqrt(2)"));
}

#[test]
fn check_fails_on_non_unitary_coin_at_torality() {
    let broken = r#"{"family":"custom","coin":[
        [[1,0],[0,0],[0,0],[0,0]],
        [[0,0],[1,0],[0,0],[0,0]],
        [[0,0],[0,0],[1,0],[0,0]],
        [[0,0],[0,0],[0,0],[0.9,0]]]}"#;
    qrw2d()
        .args(["check", "--model", broken, "--samples", "200"])
        .assert()
        .failure()
        .code(3)
        .stdout(predicates::str::contains("FAIL torality"));
}

#[test]
fn compare_handles_parity_and_outside() {
    // (7, 0, 20) violates parity; (19, 19, 20) is far outside.
    let assert = qrw2d()
        .args([
            "compare",
            "--model",
            r#"{"family":"B","t":0.5}"#,
            "--dir",
            "7,0,20",
            "--dir",
            "19,19,20",
        ])
        .assert()
        .success();
    let out = String::from_utf8(assert.get_output().stdout.clone()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    let dirs = json["sweeps"][0]["directions"].as_array().unwrap();
    assert_eq!(dirs.len(), 2);
    // parity-violating interior direction: both probabilities zero
    assert_eq!(dirs[0]["predicted_probability"], 0.0);
    assert_eq!(dirs[0]["exact_probability"], 0.0);
    // outside direction
    assert_eq!(dirs[1]["status"], "Outside");
    assert_eq!(dirs[1]["predicted_probability"], 0.0);
    assert!(dirs[1]["exact_probability"].as_f64().unwrap() < 1e-12);
}

#[test]
fn critical_reports_points_inside() {
    let assert = qrw2d()
        .args([
            "critical",
            "--model",
            r#"{"family":"S","t":0.5}"#,
            "--dir",
            "4,2,20",
        ])
        .assert()
        .success();
    let out = String::from_utf8(assert.get_output().stdout.clone()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json[0]["status"], "Inside");
    assert!(!json[0]["points"].as_array().unwrap().is_empty());
    assert!(json[0]["predicted_probability"].as_f64().unwrap() > 0.0);
    assert!(json[0].get("exact_probability").is_none());
}

#[test]
fn light_cone_edge_direction_reports_outside() {
    let assert = qrw2d()
        .args([
            "critical",
            "--model",
            r#"{"family":"S","t":0.5}"#,
            "--dir",
            "20,0,20",
        ])
        .assert()
        .success();
    let out = String::from_utf8(assert.get_output().stdout.clone()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(json[0]["status"], "Outside");
    assert_eq!(json[0]["predicted_probability"], 0.0);
}

#[test]
fn oversized_lattice_is_config_error() {
    qrw2d()
        .args([
            "simulate",
            "--model",
            r#"{"family":"S","t":0.5}"#,
            "--n",
            "100000",
            "--out",
            "/tmp/never",
        ])
        .assert()
        .failure()
        .code(2);
}

#[test]
fn model_file_roundtrip() {
    let path = tmp("model").with_extension("json");
    std::fs::write(&path, r#"{"family":"B","t":0.5}"#).unwrap();
    let out = tmp("fromfile");
    qrw2d()
        .args(["simulate", "--model"])
        .arg(&path)
        .args(["--n", "2", "--format", "csv", "--out"])
        .arg(&out)
        .assert()
        .success();
    assert!(out.with_extension("csv").exists());
}
