use std::path::Path;
use std::process::Command;

use slrt::scan::analyze;
use slrt::spectral::BandWindow;
use slrt::{build_sparse_ensemble, CouplingMatrix, EnsembleSpec};

fn slrt() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_slrt"));
    cmd.env("SLRT_THREADS", "2");
    cmd
}

fn ring_scan_config(dir: &Path, grid: &str) -> std::path::PathBuf {
    let path = dir.join("scan.json");
    let text = format!(
        r#"{{
            "model": {{"ring": {{"length": 16, "width": 2, "hopping": 1.0, "disorder": 1.0}}}},
            "scan_parameter": "disorder_w",
            "grid": {grid},
            "realizations": 4,
            "driving": {{"cutoff_band": 3}},
            "window_size": 20,
            "seed": 5
        }}"#
    );
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn scan_emits_one_row_per_realization_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = ring_scan_config(dir.path(), "[0.5, 1.0, 2.0, 4.0, 8.0]");
    let run = |out: &str| {
        let status = slrt()
            .args(["scan", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir.path().join(out))
            .arg("--no-svg")
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(dir.path().join(out).join("results.csv")).unwrap()
    };
    let first = run("a");
    let second = run("b");
    assert_eq!(first, second);
    let text = String::from_utf8(first).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert!(text.starts_with("spec_hash,param,seed,D_LRT,D_SLRT,G_LRT,G_SLRT,g_c,g_s,ref\n"));
    assert!(!dir.path().join("a").join("plot_linear.svg").exists());
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("a").join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["rows"], 20);
    assert_eq!(manifest["config"]["kappa"], 1.0);
    assert_eq!(manifest["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn seed_flag_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let config = ring_scan_config(dir.path(), "[1.0]");
    let run = |seed: &str, out: &str| {
        let status = slrt()
            .args(["scan", "--config"])
            .arg(&config)
            .args(["--seed", seed, "--out"])
            .arg(dir.path().join(out))
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read_to_string(dir.path().join(out).join("results.csv")).unwrap()
    };
    assert_ne!(run("1", "a"), run("2", "b"));
    assert!(dir.path().join("a").join("plot_log.svg").exists());
}

#[test]
fn empty_grid_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = ring_scan_config(dir.path(), "[]");
    let out = slrt().args(["scan", "--config"]).arg(&config).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));
}

#[test]
fn analyze_round_trips_the_sparsity_report() {
    let dir = tempfile::tempdir().unwrap();
    let model = build_sparse_ensemble(&EnsembleSpec::flat(80, 6, 4.0, 3)).unwrap();
    let input = dir.path().join("x.csv");
    model.coupling.write_csv(&input).unwrap();
    let out_dir = dir.path().join("report");
    let status = slrt()
        .args(["analyze", "--input"])
        .arg(&input)
        .args(["--max-r", "6", "--out"])
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let written: slrt::scan::MatrixAnalysis =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    let window = BandWindow::new(40, 80, 1, 6);
    assert_eq!(written, analyze(&model.coupling, &window).unwrap());
    let svg = std::fs::read_to_string(out_dir.join("histogram.svg")).unwrap();
    assert!(svg.contains("mean"));
}

#[test]
fn malformed_matrix_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.csv");
    let mut text = CouplingMatrix::zeros(3).to_csv_string();
    text = text.replacen("0,0,0\n", "0,0,0\n0,x,0\n", 1);
    text = text.lines().take(4).collect::<Vec<_>>().join("\n") + "\n";
    std::fs::write(&input, text).unwrap();
    let out = slrt().args(["avg", "--input"]).arg(&input).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn avg_prints_all_averages() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("c.csv");
    CouplingMatrix::from_upper(60, |_, _| 2.0).unwrap().write_csv(&input).unwrap();
    let out = slrt().args(["avg", "--input"]).arg(&input).args(["--band", "4"]).output().unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["algebraic"], 2.0);
    assert_eq!(report["median"], 2.0);
    assert!(report["resistor_network"].as_f64().unwrap() < 2.0);
}

#[test]
fn oracle_runs_a_small_cross_check() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("oracle.json");
    std::fs::write(&config, r#"{"size": 160, "band": 4, "networks": 2}"#).unwrap();
    let out = slrt()
        .args(["oracle", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 3, "{stdout}");
    assert!(dir.path().join("o").join("spreading_0.csv").exists());
    assert!(dir.path().join("o").join("oracle.json").exists());
}
