use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn sample(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "samples", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schottky")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

#[test]
fn validate_exit_codes() {
    let ok = run(&["validate", "--params", &sample("genus2.params")]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["valid"], Value::Bool(true));

    let bad = run(&["validate", "--params", &sample("overlapping.params")]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("(1, -2)"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.params");
    std::fs::write(&path, "w1 = 1,0\nrho1 = nope\n").unwrap();
    let parse = run(&["validate", "--params", path.to_str().unwrap()]);
    assert_eq!(parse.status.code(), Some(2));
}

#[test]
fn periods_json_shape() {
    let out = run(&["periods", "--params", &sample("genus2.params"), "--L", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["genus"], 2);
    assert_eq!(v["im_positive_definite"], Value::Bool(true));
    let om = v["omega"].as_array().unwrap();
    assert_eq!(om.len(), 2);
    let o12 = om[0][1].as_array().unwrap();
    let o21 = om[1][0].as_array().unwrap();
    assert!((o12[0].as_f64().unwrap() - o21[0].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn out_file_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.csv");
    let out = run(&[
        "partition",
        "--params",
        &sample("genus2.params"),
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("quantity,value_re,value_im,tail_estimate"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "Z_M");
    let re: f64 = row[1].parse().unwrap();
    assert!((re - 1.0002181605058595).abs() < 1e-10);
}

#[test]
fn lattice_partition_output() {
    let out = run(&[
        "partition",
        "--params",
        &sample("genus2.params"),
        "--lattice",
        &sample("a1.lattice.json"),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let zl = v["Z_L"].as_array().unwrap();
    let th = v["theta"].as_array().unwrap();
    let zm = v["Z_M"].as_array().unwrap();
    let (a, b) = (th[0].as_f64().unwrap(), th[1].as_f64().unwrap());
    let (c, d) = (zm[0].as_f64().unwrap(), zm[1].as_f64().unwrap());
    assert!((zl[0].as_f64().unwrap() - (a * c - b * d)).abs() < 1e-12);
}

#[test]
fn odd_heisenberg_is_exact_zero() {
    let out = run(&["correlator", "--params", &sample("genus2.params"), "--kind", "heisenberg", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["value_re"].as_f64(), Some(0.0));
    assert_eq!(v["value_im"].as_f64(), Some(0.0));
    assert_eq!(v["points"].as_array().unwrap().len(), 3);
}

#[test]
fn correlator_points_and_domain_error() {
    let p = sample("genus2.params");
    let out = run(&["correlator", "--params", &p, "--kind", "virasoro1", "--points", "0.3,1.2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["kind"], "virasoro1");
    let inside = run(&["correlator", "--params", &p, "--kind", "virasoro1", "--points", "1.0,0.0"]);
    assert_ne!(inside.status.code(), Some(0));
}

#[test]
fn eval_records() {
    let p = sample("genus2.params");
    let out = run(&["eval", "--params", &p, "--form", "nu", "--x", "-0.5,-1.1", "--x", "0.3,1.2"]);
    assert_eq!(out.status.code(), Some(0));
    let recs = json(&out)["records"].as_array().unwrap().clone();
    assert_eq!(recs.len(), 4);
    let out = run(&["eval", "--params", &p, "--form", "omega", "--x", "1.0,0.0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error: domain"));
}

#[test]
fn output_is_deterministic() {
    let args = ["eval", "--params", &sample("genus1.params"), "--form", "omega", "--grid", "3"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let one = run(&[&args[..], &["--threads", "1"]].concat());
    assert_eq!(a.stdout, one.stdout);
}

#[test]
fn check_passes_on_genus_one() {
    let out = run(&["check", "--params", &sample("genus1.params")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["passed"], Value::Bool(true));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sl2-invariance"));
}

#[test]
fn check_flags_truncation_at_short_words() {
    let out = run(&["check", "--params", &sample("genus2.params"), "--L", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    let rows = v["identities"].as_array().unwrap();
    let failed: Vec<&Value> = rows.iter().filter(|r| r["passed"] == Value::Bool(false)).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|r| r["classification"] == "truncation"));
}

#[test]
fn check_refuses_invalid_surface() {
    let out = run(&["check", "--params", &sample("overlapping.params")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}
