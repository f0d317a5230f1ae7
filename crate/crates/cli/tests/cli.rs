use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use ghostcs::pipeline::{ExperimentConfig, SolverSpec};
use ghostcs::solvers::{OmpOptions, TvOptions};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ghostcs"))
}

fn write_config(dir: &Path, cfg: &ExperimentConfig) -> PathBuf {
    let p = dir.join("config.json");
    fs::write(&p, cfg.to_json()).unwrap();
    p
}

fn fast_tv() -> ExperimentConfig {
    ExperimentConfig {
        solver: SolverSpec::Tv(TvOptions {
            max_outer: 40,
            ..TvOptions::default()
        }),
        ..ExperimentConfig::default()
    }
}

fn status(cmd: &mut Command) -> i32 {
    cmd.output().unwrap().status.code().unwrap()
}

#[test]
fn run_writes_outputs_with_sampling_ratio() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &fast_tv());
    let out = tmp.path().join("out");
    let o = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "sampling_ratio").unwrap();
    assert_eq!(row[col], "0.1953");
    for f in [
        "run_t1_recon.csv",
        "run_t1_recon.pgm",
        "run_t1_counts.csv",
        "config.json",
        "manifest.json",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let pgm = fs::read_to_string(out.join("run_t1_recon.pgm")).unwrap();
    assert!(pgm.starts_with("P2\n64 32\n65535\n"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .all(|f| f["sha256"].as_str().unwrap().len() == 64));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &fast_tv());
    for d in ["a", "b"] {
        let code = status(
            bin()
                .args(["run", "--seed", "9", "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(tmp.path().join(d)),
        );
        assert_eq!(code, 0);
    }
    for f in ["summary.csv", "run_t9_recon.csv", "run_t9_counts.csv"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn invalid_config_exits_2_and_leaves_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = fast_tv();
    cfg.ensemble.m_pairs = 0;
    let path = write_config(tmp.path(), &cfg);
    let out = tmp.path().join("out");
    assert_eq!(
        status(
            bin()
                .args(["run", "--config"])
                .arg(&path)
                .arg("--out")
                .arg(&out)
        ),
        2
    );
    assert!(!out.exists());

    fs::write(&path, "{ not json").unwrap();
    assert_eq!(status(bin().args(["run", "--config"]).arg(&path)), 2);
    assert_eq!(
        status(
            bin()
                .args(["run", "--config"])
                .arg(tmp.path().join("missing.json"))
        ),
        2
    );
}

#[test]
fn degenerate_metric_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        solver: SolverSpec::Omp(OmpOptions {
            max_sparsity: 1,
            residual_tol: 0.0,
        }),
        ..ExperimentConfig::default()
    };
    let path = write_config(tmp.path(), &cfg);
    let out = tmp.path().join("out");
    assert_eq!(
        status(
            bin()
                .args(["run", "--config"])
                .arg(&path)
                .arg("--out")
                .arg(&out)
        ),
        4
    );
    assert!(!out.exists());
}

#[test]
fn sweep_m_writes_combined_table() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), &fast_tv());
    let out = tmp.path().join("out");
    let o = bin()
        .args(["sweep-m", "--ms", "400,600", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep_m.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.contains(",0.2929,"));
    assert_eq!(
        status(
            bin()
                .args(["sweep-m", "--ms", "2048", "--config"])
                .arg(&path)
                .arg("--out")
                .arg(tmp.path().join("x"))
        ),
        2
    );
}

#[test]
fn sweep_photons_budgets() {
    let tmp = tempfile::tempdir().unwrap();
    let path = write_config(tmp.path(), &fast_tv());
    let out = tmp.path().join("out");
    let o = bin()
        .args(["sweep-photons", "--intervals", "2,4", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep_photons.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.contains("tv_plus_p800") && csv.contains("tv_differential_p1600"));
    assert_eq!(
        status(
            bin()
                .args(["sweep-photons", "--intervals", "0", "--config"])
                .arg(&path)
                .arg("--out")
                .arg(tmp.path().join("y"))
        ),
        2
    );
}
