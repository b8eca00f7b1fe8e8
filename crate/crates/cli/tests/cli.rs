//! End-to-end checks of the `she` binary: outputs, diagnostics, exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn she(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_she"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const MOMENTS: &str = r#"
kernel = "white,dim=1"
seed = 5
paths = 40

[lattice]
dim = 1
extent = 16.0
points = 64

[solver]
dt = 0.01
horizon = 0.2

[coefficients]
drift = "linear:lambda=1"
diffusion = "linear:lambda=0.5"

[initial]
kind = "gaussian_bump"
height = 1.0
width = 1.0

[moments]
p = [8.0]
times = [0.1, 0.2]
sites = ["origin", "sup"]
alpha = 0.4
parts = ["b", "c"]
constant = 1.0
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn dalang_white_noise_value() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = she(&[
        "--out",
        out.to_str().unwrap(),
        "dalang",
        "--kernel",
        "white,dim=1",
        "--alpha",
        "0.25",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("report.json"));
    let v = report["value"]["finite"].as_f64().unwrap();
    assert!((v - 0.8346).abs() < 1e-4, "{v}");
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "dalang");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn series_reduces_to_cosh() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = she(&[
        "--out",
        out.to_str().unwrap(),
        "series",
        "--a",
        "0",
        "--b",
        "1",
        "--gamma",
        "1",
        "--t",
        "2",
    ]);
    assert!(o.status.success());
    let v = json(&out.join("report.json"))["series"]["value"]
        .as_f64()
        .unwrap();
    assert!((v - 2f64.cosh()).abs() < 1e-9, "{v}");
}

#[test]
fn malformed_kernel_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = she(&[
        "--out",
        tmp.path().join("run").to_str().unwrap(),
        "dalang",
        "--kernel",
        "gaussian,dim=1,scal=2",
        "--alpha",
        "0.3",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("position"), "{err}");
    assert!(err.contains("scal"), "{err}");
}

#[test]
fn missing_config_exits_with_three() {
    let o = she(&["moments", "--config", "/definitely/not/here.toml"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn validate_reports_inconsistencies() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |text: &str, tag: &str| -> Vec<String> {
        let cfg = write_config(tmp.path(), &format!("{tag}.toml"), text);
        let out = tmp.path().join(tag);
        let o = she(&["--out", out.to_str().unwrap(), "validate", "--config", &cfg]);
        assert!(o.status.success());
        serde_json::from_value(json(&out.join("diagnostics.json"))["diagnostics"].clone()).unwrap()
    };

    assert!(run(MOMENTS, "ok").is_empty());

    let low_p = MOMENTS
        .replace("p = [8.0]", "p = [3.0]")
        .replace("alpha = 0.4", "alpha = 0.25");
    let diags = run(&low_p, "low_p");
    assert!(
        diags
            .iter()
            .any(|d| d.contains("p = 3 below (2+d)/alpha = 12")),
        "{diags:?}"
    );

    let high_alpha = MOMENTS.replace("alpha = 0.4", "alpha = 0.6");
    let diags = run(&high_alpha, "high_alpha");
    assert!(
        diags
            .iter()
            .any(|d| d.contains("alpha exceeds admissible 0.5")),
        "{diags:?}"
    );
}

#[test]
fn moments_run_writes_consistent_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "m.toml", MOMENTS);
    let out = tmp.path().join("run");
    let o = she(&[
        "--out",
        out.to_str().unwrap(),
        "--workers",
        "2",
        "moments",
        "--config",
        &cfg,
        "--paths",
        "30",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("moments.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("t,x,p,part,estimate,ci_lo,ci_hi,bound,verdict")
    );
    assert_eq!(lines.count(), 4);
    let report = json(&out.join("report.json"));
    assert_eq!(report["n_paths"], 30);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["config"]["paths"], 30);
    assert_eq!(manifest["config_hash"], report["config_hash"]);

    // The echoed config reproduces the run's hash.
    let echoed = std::fs::read_to_string(out.join("config.toml")).unwrap();
    let again = tmp.path().join("again");
    let cfg2 = write_config(tmp.path(), "echo.toml", &echoed);
    let o = she(&[
        "--out",
        again.to_str().unwrap(),
        "--workers",
        "1",
        "moments",
        "--config",
        &cfg2,
    ]);
    assert!(o.status.success());
    assert_eq!(json(&again.join("report.json")), report);
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.toml",
        &MOMENTS.replace("seed = 5", "seed = 5\nsede = 6"),
    );
    let o = she(&[
        "--out",
        tmp.path().join("r").to_str().unwrap(),
        "moments",
        "--config",
        &cfg,
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sede"));
}
