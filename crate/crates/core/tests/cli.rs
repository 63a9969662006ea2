//! End-to-end checks of the `fracchs` binary: exit codes, output files,
//! and the verify table.

use std::process::{Command, Output};

use fracchs::config::RunConfig;
use fracchs::diagnostics::EnergyReport;
use fracchs::{snapshot, verify};

fn fracchs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracchs"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn fast_config(dir: &std::path::Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.model.n = vec![32];
    cfg.stepper.t_end = 2e-4;
    cfg.init.amplitude = 0.02;
    cfg.init.band_limit = 3;
    cfg.output.directory = dir.to_string_lossy().into_owned();
    cfg.output.snapshot_every = 0;
    cfg
}

#[test]
fn help_succeeds_and_names_the_subcommands() {
    let out = fracchs(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for word in ["run", "sweep", "verify"] {
        assert!(text.contains(word), "help must mention {word}");
    }
}

#[test]
fn configuration_problems_exit_with_the_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, "no_such_key = 1\n").unwrap();
    let out = fracchs(&["run", "--config", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[model]\ns = 0.2\ndelta = 3.0\n").unwrap();
    let out = fracchs(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("model.s") && msg.contains("model.delta"));

    let out = fracchs(&["sweep", "--config", bad.to_str().unwrap(), "--axis", "delta", "--values", "0.1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unreadable_config_is_a_runtime_failure() {
    let out = fracchs(&["run", "--config", "/no/such/file.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/file.toml"));
}

#[test]
fn verify_prints_one_pass_line_per_check() {
    let out = fracchs(&["verify", "--seed", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let pass_lines: Vec<&str> = text.lines().filter(|l| l.starts_with("PASS ")).collect();
    assert_eq!(pass_lines.len(), verify::check_names().len());
    for name in verify::check_names() {
        assert!(text.contains(name), "table must mention {name}");
    }
    assert!(!text.contains("FAIL"));
}

#[test]
fn run_writes_trajectory_snapshots_and_index() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = fast_config(&out_dir);
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, cfg.to_text().unwrap()).unwrap();

    let out = fracchs(&["run", "--config", cfg_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let trajectory = std::fs::read_to_string(out_dir.join("trajectory.csv")).unwrap();
    let mut lines = trajectory.lines();
    assert_eq!(lines.next(), Some(EnergyReport::CSV_HEADER));
    assert!(lines.count() >= 2, "at least the initial and final rows");

    // snapshot cadence 0 still emits the two ends
    let index = std::fs::read_to_string(out_dir.join("snapshots.csv")).unwrap();
    let rows: Vec<&str> = index.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        let phi = snapshot::read_field(&out_dir.join(fields[2])).unwrap();
        let c = snapshot::read_field(&out_dir.join(fields[3])).unwrap();
        assert_eq!(phi.grid().n(0), 32);
        assert_eq!(c.grid().n(0), 32);
    }
}

#[test]
fn sweep_writes_a_table_and_per_level_directories() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let mut cfg = fast_config(&out_dir);
    cfg.output.sample_count = 3;
    let cfg_path = dir.path().join("sweep.toml");
    std::fs::write(&cfg_path, cfg.to_text().unwrap()).unwrap();

    let out = fracchs(&[
        "sweep",
        "--config",
        cfg_path.to_str().unwrap(),
        "--axis",
        "eps",
        "--values",
        "0.01,0.001",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(out_dir.join("sweep_eps.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
    assert!(out_dir.join("eps_0.01/trajectory.csv").exists());
    assert!(out_dir.join("eps_0.001/trajectory.csv").exists());

    let out = fracchs(&[
        "sweep",
        "--config",
        cfg_path.to_str().unwrap(),
        "--axis",
        "modes",
        "--values",
        "8.5,16",
    ]);
    assert_eq!(out.status.code(), Some(1), "fractional mode counts are rejected");
}
