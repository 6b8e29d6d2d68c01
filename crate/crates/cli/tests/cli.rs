use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_besselkit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_on(spec: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--input", spec.to_str().unwrap()];
    all.extend_from_slice(args);
    run(&all)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write_spec(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn heat_spec_is_not_bessel() {
    let out = run_on(&data("heat.json"), &["--radius-min", "0.0001"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["schema"], "besselkit.report/1");
    assert_eq!(v["verdict"]["status"], "NOT_BESSEL");
    assert_eq!(v["verdict"]["witness"], "tail_ratio_sup");
}

#[test]
fn discrete_example_is_bessel() {
    let out = run_on(&data("discrete.json"), &["--command", "criteria"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let series: f64 = (1..=60).map(|n| 2f64.powi(-2 * n) * (n * n) as f64 / (2 * n - 1) as f64).sum();
    let bound = v["verdict"]["bound"].as_f64().unwrap();
    assert!((bound - series).abs() < 1e-12, "{bound} vs {series}");
    assert_eq!(v["verdict"]["witness"], "sufficient_integral_bound");
    assert_eq!(v["verdict"]["bound_kind"], "certified");
}

#[test]
fn atom_outside_the_disc_is_not_bessel() {
    let out = run_on(&data("atom_outside.json"), &["--format", "text"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("status: NOT_BESSEL"));
    assert!(text.contains("decided by: support_radius"));
    assert!(text.contains("because necessary"));
}

#[test]
fn verify_passes_on_the_samples() {
    for (name, applicable) in [
        ("normalized_arc.json", 5),
        ("toeplitz_symbol.json", 5),
        ("mixed.json", 2),
    ] {
        let out = run_on(&data(name), &["--command", "verify"]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        let v = json(&out);
        assert_eq!(v["passed"], true);
        let checks = v["checks"].as_array().unwrap();
        let ran: Vec<_> = checks.iter().filter(|c| c["passed"].is_boolean()).collect();
        assert_eq!(ran.len(), applicable, "{name}: {checks:?}");
        assert!(ran.iter().all(|c| c["passed"] == true));
    }
}

#[test]
fn reports_are_deterministic() {
    let a = run_on(&data("toeplitz_symbol.json"), &["--max-size", "64"]);
    let b = run_on(&data("toeplitz_symbol.json"), &["--max-size", "64"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn gram_profile_formats() {
    let out = run_on(&data("lebesgue.json"), &["--command", "gram-profile", "--max-size", "128", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,norm"));
    let norms: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(norms.windows(2).all(|w| w[1] >= w[0]));
    assert!(norms.iter().all(|n| *n <= 2.0 * std::f64::consts::PI));

    let out = run_on(&data("lebesgue.json"), &["--command", "gram-profile", "--max-size", "128"]);
    let v = json(&out);
    assert_eq!(v["profile"]["structure"], "hankel");
    assert_eq!(v["profile"]["monotone"], true);
}

#[test]
fn heat_tables() {
    let out = run(&["--command", "heat", "--max-k", "4096", "--eps-min", "0.000001", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("table,x,value,scaled,reference"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let moments: Vec<_> = rows.iter().filter(|r| r[0] == "moments").collect();
    let tails: Vec<_> = rows.iter().filter(|r| r[0] == "tail").collect();
    assert_eq!(moments.len(), 13);
    assert_eq!(tails.len(), 19);
    let kq: Vec<f64> = moments.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(kq.windows(2).all(|w| w[1] > w[0]));
    for r in &moments {
        let (fourier, spectral): (f64, f64) = (r[2].parse().unwrap(), r[4].parse().unwrap());
        assert!((fourier - spectral).abs() <= 1e-8 * fourier);
    }
    for r in &tails {
        let (ratio, closed): (f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        assert!((ratio - closed).abs() <= 1e-6 * closed);
    }
}

#[test]
fn output_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let out = run_on(&data("normalized_arc.json"), &["--output", target.to_str().unwrap(), "--max-size", "32"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert_eq!(v["verdict"]["status"], "BESSEL");
    assert_eq!(v["verdict"]["bound"], 1.0);
}

#[test]
fn malformed_specs_give_structured_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("not json", "not_json.json", None),
        (r#"{"kind": "atoms"}"#, "not_list.json", None),
        (r#"[{"kind": "circle", "density": "1"}, {"kind": "disk", "density": "1 +* r"}]"#, "parse.json", Some(1)),
        (r#"[{"kind": "atoms", "atoms": [{"re": 0.5, "mass": -1}]}]"#, "mass.json", Some(0)),
        (r#"[{"kind": "circle", "density": "1"}, {"kind": "blob"}]"#, "kind.json", Some(1)),
        (r#"[{"kind": "interval", "lower": 0, "upper": 1, "density": "t", "colour": 3}]"#, "field.json", Some(0)),
        (r#"[{"kind": "interval", "lower": 0, "upper": 1, "density": "theta"}]"#, "var.json", Some(0)),
    ];
    for (text, name, index) in cases {
        let path = write_spec(&dir, name, text);
        let out = run_on(&path, &[]);
        assert_eq!(out.status.code(), Some(3), "{name}");
        let v = json(&out);
        assert_eq!(v["error"]["kind"], "input", "{name}");
        assert_eq!(v["error"]["exit_code"], 3);
        let message = v["error"]["message"].as_str().unwrap();
        if let Some(i) = index {
            assert!(message.contains(&format!("component {i}")), "{name}: {message}");
        }
        assert!(!String::from_utf8(out.stderr).unwrap().is_empty());
    }
}

#[test]
fn invalid_densities_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("neg.json", r#"[{"kind": "circle", "density": "1"}, {"kind": "interval", "lower": -0.5, "upper": 0.5, "density": "t"}]"#),
        ("log.json", r#"[{"kind": "circle", "density": "1"}, {"kind": "interval", "lower": -0.5, "upper": 0.5, "density": "log(t)"}]"#),
    ] {
        let out = run_on(&write_spec(&dir, name, text), &["--command", "criteria"]);
        assert_eq!(out.status.code(), Some(3), "{name}");
        let v = json(&out);
        assert!(v["error"]["message"].as_str().unwrap().starts_with("component 1"), "{v}");
    }
}

#[test]
fn usage_errors() {
    assert_eq!(run(&["--bogus"]).status.code(), Some(3));
    assert_eq!(run(&["--command", "analyze"]).status.code(), Some(3));
    assert_eq!(run(&["--command", "explode"]).status.code(), Some(3));
    assert_eq!(run_on(&data("lebesgue.json"), &["--tol", "0"]).status.code(), Some(3));
    assert_eq!(run_on(Path::new("/nonexistent/spec.json"), &[]).status.code(), Some(3));
    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8(help.stdout).unwrap().contains("--eps-min"));
}

#[test]
fn spec_floats_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_spec(&dir, "atoms.json", r#"[{"kind": "atoms", "atoms": [{"re": 0.9999847412109375, "mass": 0.000244140625}, {"re": 0.1, "im": 0.7, "mass": 0.3}]}]"#);
    let out = run_on(&path, &["--command", "gram-profile", "--max-size", "4"]);
    let v = json(&out);
    assert_eq!(v["measure"][0]["atoms"][0]["re"].as_f64(), Some(1.0 - 2f64.powi(-16)));
    assert_eq!(v["measure"][0]["atoms"][1]["re"].as_f64(), Some(0.1));
}
