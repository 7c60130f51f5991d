use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use irsguard_harness::output::{read_csv, HEADER};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_irsguard"))
}

fn smoke_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/smoke.toml")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("cfg.toml");
    fs::write(&path, format!("schema_version = 1\n{body}")).unwrap();
    path
}

#[test]
fn run_writes_csv_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&["run", "--config", smoke_config().to_str().unwrap(), "--trials", "8", "--seed", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&out.join("results.csv")).unwrap();
    // Two users times two schemes.
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.n_trials == 8 && r.m_irs == 8 && r.status == "ok"));
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seeds"]["master"], 3);
    assert_eq!(meta["experiment"], "run");
    assert!(meta["expectation_convention"].is_string());
}

#[test]
fn scheme_flag_filters_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = smoke_config();
    let o = run(&["fig1", "--config", cfg.to_str().unwrap(), "--trials", "4", "--scheme", "benchmark", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let rows = read_csv(&out.join("results.csv")).unwrap();
    assert_eq!(rows.len(), 3 * 2);
    assert!(rows.iter().all(|r| r.scheme == "benchmark" && r.f_mu.is_nan()));
    let first = fs::read_to_string(out.join("results.csv")).unwrap();
    assert!(first.starts_with(&HEADER.join(",")));
}

#[test]
fn validate_passes_and_records_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[validate]\nchecks = [\"pilot_exactness\", \"contamination\", \"x_residuals\"]\nrealizations = 5\nsolver_runs = 3\n",
    );
    let out = dir.path().join("v");
    let o = run(&["validate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 3);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("validation.json")).unwrap()).unwrap();
    assert_eq!(report["checks"].as_array().unwrap().len(), 3);
}

#[test]
fn validate_fails_on_injected_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[validate]\nchecks = [\"contamination\"]\ninject_alpha_e = 0.3\n");
    let out = dir.path().join("v");
    let o = run(&["validate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("FAIL contamination"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases = [
        "unknown_key = 1\n",
        "[run]\nmaster_seed = -1\n",
        "[system]\nk_users = 2\nattacked_user = 2\n",
        "[run]\nn_trials = \"many\"\n",
    ];
    for body in cases {
        let cfg = write_config(dir.path(), body);
        let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "config {body:?}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
    fs::write(dir.path().join("future.toml"), "schema_version = 9\n").unwrap();
    let o = run(&["run", "--config", dir.path().join("future.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["run", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["run", "--trials", "0", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("results.csv").exists());
}

#[test]
fn unknown_verb_is_rejected() {
    let o = run(&["fig3"]);
    assert!(!o.status.success());
}
