//! End-to-end runs of the `thaspec` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thaspec"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("config.json");
    let text = format!(
        r#"{{
  "layout": {{
    "total_length_m": 12.0,
    "components": [
      {{ "label": "a", "position_m": 9.0, "reflectance_db": -50.0 }},
      {{ "label": "b", "position_m": 11.0, "reflectance_db": -53.0 }}
    ]
  }},
  "acquisition": {{ "duration_s": 5.0, "seed": 3 }},
  "grid": [1100.0, 1310.0, 1550.0]{extra}
}}"#
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_assumptions(v: &Value) {
    let a = &v["assumptions"];
    assert!(a["f_eve_hz"].is_number() && a["qber"].is_number(), "{v}");
    assert!(a["constants"].is_string() && a["dead_time_model"].is_string());
}

#[test]
fn analytic_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let scan = dir.path().join("scan");
    let out = run(&["--config", s(&cfg), "--mode", "analytic", "--out", s(&scan), "simulate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let traces: Vec<_> = std::fs::read_dir(scan.join("traces")).unwrap().collect();
    assert_eq!(traces.len(), 3);
    let manifest = json(&scan.join("manifest.json"));
    assert_assumptions(&manifest);
    assert!(manifest.get("seed").is_none());
    assert!(manifest["acquisition"].get("seed").is_none());
    let trace = std::fs::read_to_string(scan.join("traces/trace_1550.00nm.csv")).unwrap();
    assert!(trace.lines().nth(1).unwrap().split(',').nth(3).unwrap().contains('.'));

    let analysis = dir.path().join("analysis");
    let out = run(&[
        "--config",
        s(&cfg),
        "--out",
        s(&analysis),
        "analyze",
        "--scan",
        s(&scan),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let heat = std::fs::read_to_string(analysis.join("heatmap.csv")).unwrap();
    let rows: Vec<&str> = heat.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.split(',').count() == 13_334 + 1));
    let peaks = json(&analysis.join("peaks.json"));
    assert_assumptions(&peaks);
    let per = peaks["wavelengths"].as_array().unwrap();
    assert_eq!(per[0]["approximate"], Value::Bool(true));
    assert_eq!(per[2]["approximate"], Value::Bool(false));
    let r: Vec<f64> = per[2]["peaks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["reflectance_db"].as_f64().unwrap())
        .collect();
    assert!((r[0] + 50.0).abs() < 0.1 && (r[1] + 53.0).abs() < 0.1, "{r:?}");

    let report = dir.path().join("report");
    let out = run(&[
        "--config",
        s(&cfg),
        "--out",
        s(&report),
        "security-report",
        "--reflectance",
        s(&analysis.join("worst_case.csv")),
        "--p-max-dbm",
        "40",
        "--transmittance-db",
        "-250",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&report.join("security_report.json"));
    assert_assumptions(&rep);
    let chi = rep["report"]["worst_case"]["chi_upper"].as_f64().unwrap();
    assert!(chi > 1e-15 && chi < 1e-13, "{chi}");
    assert_eq!(
        std::fs::read_to_string(report.join("leakage.csv"))
            .unwrap()
            .lines()
            .count(),
        4
    );
}

#[test]
fn monte_carlo_manifest_records_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let scan = dir.path().join("scan");
    let out = run(&["--config", s(&cfg), "--seed", "99", "--out", s(&scan), "simulate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = json(&scan.join("manifest.json"));
    assert_eq!(manifest["seed"], 99);
    assert_eq!(manifest["acquisition"]["seed"], 99);
}

#[test]
fn missing_layout_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.json");
    std::fs::write(&cfg, r#"{"layout": "no_such_layout.json"}"#).unwrap();
    let out = run(&["--config", s(&cfg), "--out", s(dir.path()), "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_layout.json"));
}

#[test]
fn malformed_spectrum_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "wavelength_nm,value\n1100,-50\n1200,oops\n").unwrap();
    let out = run(&["--out", s(dir.path()), "fit-connector", "--spectrum", s(&csv)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("bad.csv"), "{err}");
}

#[test]
fn noiseless_connector_fit_via_cli() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("conn.csv");
    let model = thaspec::connector::ConnectorModel::new(1.454, 1.474, 0.015).unwrap();
    let mut text = String::from("wavelength_nm,value\n");
    for k in 0..29 {
        let wl = 1100.0 + 25.0 * k as f64;
        text.push_str(&format!("{wl},{}\n", model.reflectance_db(wl, true).unwrap()));
    }
    std::fs::write(&csv, text).unwrap();
    let out = run(&["--out", s(dir.path()), "fit-connector", "--spectrum", s(&csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let fit = json(&dir.path().join("fit.json"));
    assert_assumptions(&fit);
    assert!(fit["fit"]["residual_rms_db"].as_f64().unwrap() <= 1e-6);
    let rows = std::fs::read_to_string(dir.path().join("model_vs_data.csv")).unwrap();
    assert_eq!(rows.lines().count(), 30);
}

#[test]
fn zero_reflectance_gives_zero_leakage() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    std::fs::write(&csv, "wavelength_nm,value\n1500,-inf\n1600,-inf\n").unwrap();
    let out = run(&[
        "--out",
        s(dir.path()),
        "security-report",
        "--reflectance",
        s(&csv),
        "--p-max-dbm",
        "40",
        "--transmittance-db",
        "-250",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = json(&dir.path().join("security_report.json"));
    for r in rep["report"]["records"].as_array().unwrap() {
        assert_eq!(r["chi_upper"].as_f64(), Some(0.0));
    }
}

#[test]
fn security_report_needs_a_power_limit() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    std::fs::write(&csv, "wavelength_nm,value\n1500,-50\n1600,-50\n").unwrap();
    let out = run(&["--out", s(dir.path()), "security-report", "--reflectance", s(&csv)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_fidelity_writes_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--out", s(dir.path()), "verify-fidelity", "--trials", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("fidelity.json"));
    assert_assumptions(&v);
    assert_eq!(v["violations"], 0);
    let rows = std::fs::read_to_string(dir.path().join("fidelity_trials.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 3 * 20);
}
