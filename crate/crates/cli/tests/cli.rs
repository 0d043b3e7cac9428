use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const S12: &str = r#"{"g":1,"b":2,"boundary_lengths":[1.5,2.0],"handles":[{"l1":2.5,"l2":2.6,"theta":1.2,"twist":0.1}]}"#;
const S04: &str =
    r#"{"g":0,"b":4,"boundary_lengths":[1.2,1.5,2.0,1.8],"curve_lengths":[1.7],"twists":[0.3]}"#;
const S12_RIGHT: &str = r#"{"g":1,"b":2,"boundary_lengths":[1.5,2.0],"handles":[{"l1":2.5,"l2":2.6,"theta":1.5707963267948966}]}"#;

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_margulis"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn diagnostic(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn surface_summary_reports_dimension_and_lengths() {
    let d = TempDir::new().unwrap();
    let spec = write(&d, "s12.json", S12);
    let out = run(&["surface", s(&spec)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["surface"]["dimension"], 6);
    assert_eq!(v["generators"].as_array().unwrap().len(), 3);
    assert!(v["max_length_error"].as_f64().unwrap() <= 1e-8);
    let names: Vec<&str> = v["curves"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"gamma1") && names.contains(&"g1"));
}

#[test]
fn invalid_specs_exit_2() {
    let d = TempDir::new().unwrap();
    let bad = write(&d, "bad.json", r#"{"g":0,"b":2,"boundary_lengths":[1,1]}"#);
    let out = run(&["surface", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(diagnostic(&out)["error"], "invalid-surface");

    let mal = write(&d, "mal.json", "{oops");
    let out = run(&["surface", s(&mal)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(diagnostic(&out)["error"], "malformed-json");
}

#[test]
fn zero_coordinates_give_a_zero_table() {
    let d = TempDir::new().unwrap();
    let spec = write(&d, "s12.json", S12);
    let zero = write(
        &d,
        "zero.json",
        r#"{"alpha":[0,0],"kappa":[0],"beta":[],"zeta1":[0],"zeta2":[0],"tau":[0],"eps":[]}"#,
    );
    let cc = d.path().join("cocycle.json");
    let out = run(&["coords", s(&spec), s(&zero), "--cocycle-out", s(&cc)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let m = &v["vectors"][0]["measured"];
    for key in ["alpha", "kappa", "zeta1", "zeta2", "tau"] {
        assert!(m[key]
            .as_array()
            .unwrap()
            .iter()
            .all(|x| x.as_f64() == Some(0.0)));
    }
    let c: Value = serde_json::from_str(&fs::read_to_string(cc).unwrap()).unwrap();
    assert_eq!(c[0]["generator_values"].as_array().unwrap().len(), 3);
}

#[test]
fn random_coordinates_round_trip_deterministically() {
    let d = TempDir::new().unwrap();
    let spec = write(&d, "s12.json", S12);
    let a = run(&["coords", s(&spec), "--random", "10", "--seed", "11"]);
    let b = run(&["coords", s(&spec), "--random", "10", "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert!(v["max_residual"].as_f64().unwrap() <= 1e-8);
    let c = run(&["coords", s(&spec), "--random", "10", "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn right_angle_handle_exits_3() {
    let d = TempDir::new().unwrap();
    let spec = write(&d, "ra.json", S12_RIGHT);
    let out = run(&["coords", s(&spec), "--random", "1"]);
    assert_eq!(out.status.code(), Some(3));
    let msg = diagnostic(&out)["message"].as_str().unwrap().to_string();
    assert!(msg.contains("kappa / K"), "{msg}");
}

#[test]
fn random_cosine_suite_passes() {
    let d = TempDir::new().unwrap();
    let spec = write(&d, "s04.json", S04);
    let out = run(&[
        "verify-cosine",
        s(&spec),
        "--curve",
        "f1",
        "--random",
        "30",
        "--seed",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["failed"], 0);
    assert!(v["passed"].as_u64().unwrap() >= 10);
    for c in v["checks"].as_array().unwrap() {
        assert!(c["residual_algebraic"].as_f64().unwrap() <= 1e-9);
    }
}

#[test]
fn one_sided_words_give_zero_rows() {
    let d = TempDir::new().unwrap();
    let spec = write(&d, "s04.json", S04);
    let words = write(
        &d,
        "w.txt",
        "gamma2\n# comment\ngamma3 gamma4^-1\ngamma4^2\n",
    );
    let out = run(&[
        "verify-cosine",
        s(&spec),
        "--curve",
        "f1",
        "--words",
        s(&words),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 3);
    for c in checks {
        assert_eq!(c["cosine_sum"].as_f64(), Some(0.0));
        assert!(c["mar"].as_f64().unwrap().abs() < 1e-12);
        assert!(c["fd_derivative"].as_f64().unwrap().abs() < 1e-8);
    }
}

#[test]
fn nonseparating_curves_need_the_experimental_flag() {
    let d = TempDir::new().unwrap();
    let spec = write(&d, "s12.json", S12);
    let out = run(&[
        "verify-cosine",
        s(&spec),
        "--curve",
        "w1_1",
        "--random",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(diagnostic(&out)["error"], "unsupported-curve");

    let out = run(&[
        "verify-cosine",
        s(&spec),
        "--curve",
        "w2_1",
        "--random",
        "3",
        "--experimental",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["asserted"], false);

    let out = run(&[
        "verify-cosine",
        s(&spec),
        "--curve",
        "gamma1",
        "--random",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn handle_curve_twist_passes() {
    let d = TempDir::new().unwrap();
    let spec = write(&d, "s12.json", S12);
    let out = run(&[
        "verify-cosine",
        s(&spec),
        "--curve",
        "g1",
        "--random",
        "15",
        "--seed",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["failed"], 0);
}

#[test]
fn torus_report_at_right_angle() {
    let out = run(&["torus-report", "2.0", "2.5", "1.5707963267948966"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["right_angle"], true);
    let c = v["coefficients_g1"].as_array().unwrap();
    assert!(c[2..].iter().all(|x| x.as_f64().unwrap().abs() < 1e-10));
    let k = v["k"].as_f64().unwrap();
    let kr = v["k_right_angle"].as_f64().unwrap();
    assert!((k / kr - 1.0).abs() < 1e-9);
}

#[test]
fn torus_report_generic_and_invalid() {
    let out = run(&["torus-report", "2.0", "2.5", "1.1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["residual_g1"].as_f64().unwrap() <= 1e-9);
    assert!(v["k_right_angle"].is_null());

    let out = run(&["torus-report", "2.0", "2.5", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(diagnostic(&out)["error"], "invalid-angle");
}

#[test]
fn csv_output_uses_17_digits() {
    let out = run(&["torus-report", "2.0", "2.5", "1.1", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("quantity,value"));
    let value = lines.next().unwrap().split(',').nth(1).unwrap();
    let mantissa = value
        .split('e')
        .next()
        .unwrap()
        .trim_start_matches('-')
        .replace('.', "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn output_flag_writes_the_report() {
    let d = TempDir::new().unwrap();
    let path = d.path().join("r.json");
    let out = run(&["torus-report", "2.0", "2.5", "1.1", "--output", s(&path)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert!(v["k"].as_f64().is_some());
}
