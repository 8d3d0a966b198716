//! End-to-end checks of the `dpistab` binary: flags, file formats, exit
//! codes and determinism of the emitted data files.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dpistab"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .args(args)
        .arg("--output-dir")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|_| panic!("missing {name}"))
}

#[test]
fn border_explicit_emits_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["border", "--z", "1", "--eps-hat", "0:1:0.1"]);
    assert!(out.status.success());
    let csv = read(dir.path(), "border.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "eps_hat,r_border");
    assert_eq!(lines.len(), 12, "header plus 11 rows");
    // eps_hat = 0 row recovers the linear limit r = 1.
    assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0"));

    let manifest = read(dir.path(), "manifest.json");
    let m: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(m["command"], "border");
    assert_eq!(m["outputs"][0], "border.csv");
}

#[test]
fn border_implicit_gap_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["border", "--z", "1", "--eps-hat", "1", "--scheme", "implicit"],
    );
    assert!(out.status.success());
    let csv = read(dir.path(), "border.csv");
    let row = csv.lines().nth(1).unwrap();
    let fields: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
    assert!((fields[1] - 0.1715728752538099).abs() < 1e-12);
    assert!((fields[2] - 5.82842712474619).abs() < 1e-12);
}

#[test]
fn border_matches_library_bisection_at_higher_degree() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["border", "--z", "2", "--eps-hat", "0.1"]);
    assert!(out.status.success());
    let csv = read(dir.path(), "border.csv");
    let row = csv.lines().nth(1).unwrap();
    let r: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    let expect = dpistab_core::explicit_border_r(0.1, 2).unwrap().r_max;
    assert_eq!(r, expect);
}

#[test]
fn scan_csv_shape_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "scan",
            "--z",
            "1",
            "--r",
            "0:1:0.1",
            "--eps-hat",
            "0:0.4:0.2",
            "--max-iter",
            "4000",
        ],
    );
    assert!(out.status.success());
    let csv = read(dir.path(), "region.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "eps_hat,r,analytic,empirical,iterations");
    assert_eq!(lines.len(), 1 + 11 * 3);
    let summary: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "scan_summary.json")).unwrap();
    assert_eq!(summary["cells"], 33);
    assert!(summary["disagreement_cells"].as_u64().unwrap() <= 3);
}

#[test]
fn scan_rejects_empty_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["scan", "--r", "1:0:0.1", "--eps-hat", "0:1:0.5"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn scan_data_files_are_byte_identical_across_runs() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let args = [
        "scan", "--z", "1", "--r", "0:1:0.05", "--eps-hat", "0:1:0.1", "--max-iter", "3000",
    ];
    assert!(run_in(d1.path(), &args).status.success());
    assert!(run_in(d2.path(), &args).status.success());
    for name in ["region.csv", "scan_summary.json", "manifest.json"] {
        assert_eq!(
            fs::read(d1.path().join(name)).unwrap(),
            fs::read(d2.path().join(name)).unwrap(),
            "{name} differs between runs"
        );
    }
}

#[test]
fn amplitudes_match_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["amplitudes", "--r", "0.5", "--order", "8"]);
    assert!(out.status.success());
    let csv = read(dir.path(), "amplitudes.csv");
    for line in csv.lines().skip(1) {
        let rel: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!(rel < 1e-8, "line {line}");
    }
}

#[test]
fn amplitudes_zero_r_kills_higher_orders() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["amplitudes", "--r", "0", "--order", "5"]);
    assert!(out.status.success());
    let csv = read(dir.path(), "amplitudes.csv");
    for line in csv.lines().skip(2) {
        let recursive: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(recursive, 0.0, "line {line}");
    }
}

#[test]
fn amplitudes_implicit_closed_form_at_first_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["amplitudes", "--r", "0.5", "--scheme", "implicit", "--order", "5"],
    );
    assert!(out.status.success());
    let csv = read(dir.path(), "amplitudes.csv");
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1], "1", "fixed point at the first step");
        assert_eq!(fields[2], fields[3], "recursive equals closed form");
    }
}

#[test]
fn amplitudes_outside_convergence_domain_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["amplitudes", "--r", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("|r| < 1"), "stderr: {stderr}");
}

#[test]
fn poisson_single_run_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["poisson", "--m", "50", "--beta", "0.03"]);
    assert!(out.status.success());
    let result: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "poisson_result.json")).unwrap();
    assert_eq!(result["status"], "converged");
    let csv = read(dir.path(), "poisson_run.csv");
    assert!(csv.starts_with("step,max_norm\n0,"));

    // The same run through a JSON config.
    let cfg_path = dir.path().join("cfg.json");
    fs::write(&cfg_path, r#"{"M": 50, "beta": 0.03, "max_iter": 50000}"#).unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    let out = run_in(
        dir2.path(),
        &["poisson", "--config", cfg_path.to_str().unwrap()],
    );
    assert!(out.status.success());
    assert_eq!(read(dir.path(), "poisson_run.csv"), read(dir2.path(), "poisson_run.csv"));
}

#[test]
fn poisson_divergence_is_a_valid_result() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["poisson", "--m", "50", "--beta", "0.2"]);
    assert!(out.status.success(), "divergence still exits 0");
    let result: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "poisson_result.json")).unwrap();
    assert_eq!(result["status"], "diverged");
}

#[test]
fn env_var_overrides_iteration_budget() {
    let dir = tempfile::tempdir().unwrap();
    // A two-iteration budget cannot converge at beta = 0.03.
    let out = bin()
        .args(["poisson", "--m", "50", "--beta", "0.03"])
        .arg("--output-dir")
        .arg(dir.path())
        .env("DPISTAB_MAX_ITER", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let result: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "poisson_result.json")).unwrap();
    assert_eq!(result["status"], "maxiter");
}

#[test]
fn fourier_contour_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &[
            "fourier",
            "--coeff",
            "1,2,-0.05",
            "--eta",
            "0:2:0.1",
            "--eps-hat",
            "0.1",
        ],
    );
    assert!(out.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "fourier_summary.json")).unwrap();
    assert_eq!(summary["verdict"], "stable");
    assert!((summary["r"].as_f64().unwrap() - 0.2).abs() < 1e-12);
    assert!((summary["theta"].as_f64().unwrap() - 0.03125).abs() < 1e-12);
    let csv = read(dir.path(), "fourier_contour.csv");
    assert!(csv.starts_with("eta_1,theta,verdict\n"));
    assert_eq!(csv.lines().count(), 22);
}

#[test]
fn fourier_dimension_mismatch_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(
        dir.path(),
        &["fourier", "--coeff", "2,2,-1", "--eta", "0:1:0.5"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flags_exit_with_usage_code() {
    let out = bin().args(["border", "--nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
