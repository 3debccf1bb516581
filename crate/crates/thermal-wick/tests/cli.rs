//! End-to-end tests of the `thermal-wick` binary: exit codes, report
//! contents and curve files.

use std::path::{Path, PathBuf};
use std::process::Command;

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("thermal-wick-cli-{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_cli(config: &Path, out: &Path) -> (i32, String) {
    let output = Command::new(env!("CARGO_BIN_EXE_thermal-wick"))
        .arg("run")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    (
        output.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&output.stdout).into_owned(),
    )
}

#[test]
fn qubit_kms_run_passes() {
    let dir = workdir("kms");
    let config = dir.join("config.json");
    std::fs::write(
        &config,
        r#"{
  "seed": 11,
  "system": {"kind": "qubit", "energy": 1.0, "beta": 1.0},
  "tasks": ["verify-kms"],
  "knobs": {"trials": 25}
}"#,
    )
    .unwrap();
    let (code, _) = run_cli(&config, &dir.join("out"));
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["overall_pass"], true);
    let record = &report["records"][0];
    assert_eq!(record["name"], "kms_residual_rel");
    assert!(record["value"].as_f64().unwrap() < 1e-9);
    assert_eq!(record["tolerance"].as_f64().unwrap(), 1e-9);
}

#[test]
fn malformed_config_exits_2_without_report() {
    let dir = workdir("malformed");
    let config = dir.join("config.json");
    std::fs::write(&config, "{ not json").unwrap();
    let out = dir.join("out");
    let (code, _) = run_cli(&config, &out);
    assert_eq!(code, 2);
    assert!(!out.join("report.json").exists());
}

#[test]
fn reconstruct_roundtrip_reports_bohr_spectrum() {
    let dir = workdir("reconstruct");
    let config = dir.join("config.json");
    std::fs::write(
        &config,
        r#"{
  "seed": 5,
  "system": {"kind": "qubit", "energy": 1.0, "beta": 1.0},
  "tasks": ["reconstruct", "roundtrip"],
  "knobs": {"n_max": 1, "m": 1, "delta": 0.125, "trials": 30}
}"#,
    )
    .unwrap();
    let (code, _) = run_cli(&config, &dir.join("out"));
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap())
            .unwrap();
    let spectrum: Vec<f64> = report["reconstruction"]["spectrum"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let expect = [-1.0, 0.0, 0.0, 1.0];
    assert_eq!(spectrum.len(), 4);
    for (got, want) in spectrum.iter().zip(expect.iter()) {
        assert!((got - want).abs() < 1e-7, "spectrum {spectrum:?}");
    }
    assert_eq!(report["reconstruction"]["rank"], 4);
}

#[test]
fn rtgf_curve_has_expected_rows() {
    let dir = workdir("curve");
    let config = dir.join("config.json");
    std::fs::write(
        &config,
        r#"{
  "seed": 1,
  "system": {"kind": "qubit", "energy": 1.0, "beta": 1.0},
  "tasks": ["verify-kms"],
  "knobs": {"trials": 5},
  "curves": [
    {"kind": "rtgf", "file": "rtgf.csv",
     "word": [{"gen": "e01", "time": 0.0}, {"gen": "e10"}],
     "sweep": {"min": 0.0, "max": 6.3, "points": 64}}
  ]
}"#,
    )
    .unwrap();
    let (code, _) = run_cli(&config, &dir.join("out"));
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(dir.join("out/rtgf.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with('#'));
    assert_eq!(lines[1], "t,re,im");
    assert_eq!(lines.len(), 2 + 64);
}

#[test]
fn fermion_togf_curve_flips_sign_across_beta() {
    let dir = workdir("fermion-curve");
    let config = dir.join("config.json");
    // Sweep the creator's time through beta with the annihilator fixed just
    // inside the circle; anti-periodicity flips the sign at the wrap.
    std::fs::write(
        &config,
        r#"{
  "seed": 2,
  "oracle": {"kind": "fermion", "energies": [0.8], "beta": 1.0},
  "tasks": ["verify-green"],
  "knobs": {"trials": 10},
  "curves": [
    {"kind": "togf", "file": "togf.csv",
     "word": [{"gen": "psi*_0", "time": 0.0}, {"gen": "psi_0"}],
     "sweep": {"min": 0.05, "max": 1.95, "points": 39}}
  ]
}"#,
    )
    .unwrap();
    let (code, _) = run_cli(&config, &dir.join("out"));
    assert_eq!(code, 0, "fermion verify-green run failed");
    let text = std::fs::read_to_string(dir.join("out/togf.csv")).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(2)
        .map(|line| {
            let mut parts = line.split(',');
            (
                parts.next().unwrap().parse().unwrap(),
                parts.next().unwrap().parse().unwrap(),
            )
        })
        .collect();
    // phi(tau + beta) = -phi(tau): compare mirrored samples.
    let beta = 1.0;
    for &(tau, value) in rows.iter().filter(|(tau, _)| *tau < beta - 0.01) {
        if let Some(&(_, wrapped)) = rows
            .iter()
            .find(|(t2, _)| (t2 - (tau + beta)).abs() < 1e-9)
        {
            assert!(
                (wrapped + value).abs() < 1e-10,
                "tau={tau}: {value} vs wrapped {wrapped}"
            );
        }
    }
    // The report carries the fitted statistics sign.
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["periodicity"]["fitted_sign"], -1);
}

#[test]
fn boson_oracle_reports_periodic_sign() {
    let dir = workdir("boson");
    let config = dir.join("config.json");
    std::fs::write(
        &config,
        r#"{
  "seed": 3,
  "oracle": {"kind": "boson", "frequencies": [1.2], "beta": 1.0, "n_trunc": 40},
  "tasks": ["verify-green"],
  "knobs": {"trials": 10}
}"#,
    )
    .unwrap();
    let (code, _) = run_cli(&config, &dir.join("out"));
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["periodicity"]["fitted_sign"], 1);
}

#[test]
fn failing_tolerance_still_writes_report_and_exits_1() {
    let dir = workdir("failing");
    let config = dir.join("config.json");
    // An absurdly tight KMS tolerance cannot be met.
    std::fs::write(
        &config,
        r#"{
  "seed": 4,
  "system": {"kind": "qubit", "energy": 1.0, "beta": 1.0},
  "tasks": ["verify-kms"],
  "knobs": {"trials": 5},
  "tolerances": {"kms_rel": 1e-30}
}"#,
    )
    .unwrap();
    let (code, _) = run_cli(&config, &dir.join("out"));
    assert_eq!(code, 1);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["overall_pass"], false);
}
