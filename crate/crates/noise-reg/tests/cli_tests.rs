//! End-to-end checks of the command-line binary: output file contracts,
//! settings precedence, config diagnostics, exit codes, and bitwise
//! manifest replay across worker counts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_noise-reg"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path.as_ref())
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.as_ref().display()))
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert!(out.status.success());
}

/// Closed-form eigenstructure at `xi = 2`, `sigma = 1`: `gamma = 2`,
/// `Delta = 6`, `lambda = (2, -4)`, all real and exactly representable, so
/// the CSV row is exact text.
#[test]
fn eigen_sweep_contains_exact_reference_row() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("eig.csv");
    let out = run(&[
        "eigen",
        "--sigma",
        "1",
        "--xi-max",
        "10",
        "--grid-points",
        "64",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&out_path);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "xi,gamma,re_delta,im_delta,re_lambda_plus,im_lambda_plus,re_lambda_minus,im_lambda_minus"
    );
    assert!(
        csv.lines().any(|l| l == "2,2,6,0,2,0,-4,0"),
        "reference row missing:\n{csv}"
    );
    // Sidecar manifest is always written and echoes the resolved settings.
    let manifest = read(format!("{}.manifest.json", out_path.display()));
    let v: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(v["command"], "eigen");
    assert_eq!(v["sigma"], 1.0);
    assert_eq!(v["grid_points"], 64);
}

#[test]
fn verify_lambda_claim_passes_and_reports_the_peak() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("v");
    let out = run(&[
        "verify",
        "--claim",
        "lambda",
        "--sigma",
        "1",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.lines().any(|l| {
            let mut w = l.split_whitespace();
            w.next() == Some("lambda") && w.next() == Some("PASS")
        }),
        "stdout: {stdout}"
    );
    let report = read(format!("{}_lambda.json", prefix.display()));
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["pass"], true);
    let abscissa = &v["detail"][0];
    assert_eq!(abscissa["claim"], "lambda-abscissa");
    assert_eq!(abscissa["observed"], 2.0);
    assert_eq!(abscissa["pass"], true);
}

#[test]
fn verify_global_without_noise_fails_with_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("g");
    let out = run(&[
        "verify",
        "--claim",
        "global",
        "--sigma",
        "0",
        "--xi-max",
        "100",
        "--grid-points",
        "64",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let report = read(format!("{}_global.json", prefix.display()));
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["pass"], false);
    let failure = &v["detail"]["certification_failure"];
    assert!(failure.is_object(), "report: {v}");
    assert!(failure["worst_xi"].as_f64().unwrap() > 0.0);
    assert!(failure["growth_ratio"].as_f64().unwrap() > 1.0);
}

#[test]
fn unknown_config_key_is_rejected_with_location_and_vocabulary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "sigma = 1\npath_count = 3\n").unwrap();
    let out = run(&[
        "eigen",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("e.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("unknown key `path_count`"), "stderr: {err}");
    assert!(err.contains(":2:"), "stderr lacks line number: {err}");
    assert!(err.contains("n_paths"), "stderr lacks valid keys: {err}");
}

#[test]
fn malformed_config_value_is_rejected_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "sigma = plenty\n").unwrap();
    let out = run(&[
        "eigen",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("e.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":1:"), "stderr: {err}");
    assert!(err.contains("not a valid number"), "stderr: {err}");
}

#[test]
fn unknown_claim_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "verify",
        "--claim",
        "everything",
        "--out",
        dir.path().join("v").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

/// Flags override config; the resolved value lands in the sidecar manifest.
#[test]
fn flags_override_config_in_resolved_settings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "sigma = 2\nxi_max = 50\n# comment\n").unwrap();
    let out_path = dir.path().join("e.csv");
    let out = run(&[
        "eigen",
        "--config",
        cfg.to_str().unwrap(),
        "--sigma",
        "1",
        "--grid-points",
        "64",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value =
        serde_json::from_str(&read(format!("{}.manifest.json", out_path.display()))).unwrap();
    assert_eq!(v["sigma"], 1.0, "flag must beat config");
    assert_eq!(v["xi_max"], 50.0, "config must beat default");
}

/// At `xi = 0` the mode is deterministic: the noise enters as `i sigma xi U`,
/// so every path coincides and the standard errors are exactly zero.
#[test]
fn zero_frequency_simulation_is_noiseless() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sim.csv");
    let out = run(&[
        "simulate",
        "--xi",
        "0",
        "--sigma",
        "1",
        "--paths",
        "10",
        "--dt",
        "0.01",
        "--times",
        "0.5",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&out_path);
    let row = csv.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[1], "1"); // m1_hat: |U| frozen at 1
    assert_eq!(cols[4], "0"); // se1
    assert_eq!(cols[5], "0"); // se2
    assert_eq!(cols[6], "0"); // se3
}

/// Replaying a manifest with a different worker count reproduces the CSV
/// byte for byte; stream assignment is by path index, not by schedule.
#[test]
fn manifest_replay_is_bitwise_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out = run(&[
        "simulate",
        "--xi",
        "2",
        "--sigma",
        "1",
        "--paths",
        "400",
        "--dt",
        "0.002",
        "--times",
        "0.25,0.5",
        "--workers",
        "1",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&[
        "simulate",
        "--manifest",
        &format!("{}.manifest.json", a.display()),
        "--workers",
        "4",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}
