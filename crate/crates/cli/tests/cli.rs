//! End-to-end checks of the `izo` binary: exit codes, configuration
//! layering and file output.

use std::fs;
use std::path::Path;
use std::process::{Command as Process, Output};

use izo_cli::{read_records, Command, ExperimentConfig};
use serde_json::Value;

fn izo(args: &[&str]) -> Output {
    Process::new(env!("CARGO_BIN_EXE_izo")).args(args).output().expect("izo binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn summary_of(csv_path: &Path) -> Value {
    let text = fs::read_to_string(format!("{}.summary.json", csv_path.display())).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn successful_run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let out = izo(&["run", "--seed", "3", "--K", "200", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("# izo run\n"));
    assert!(csv.contains("# seed=3\n"));
    let rows = read_records(&csv).unwrap();
    assert_eq!(rows.last().unwrap().k, 200);
    assert_eq!(summary_of(&path)["config"]["K"], 200);
}

#[test]
fn csv_goes_to_stdout_without_out() {
    let out = izo(&["estimator-sweep", "--seed", "1"]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("# izo estimator-sweep\n"));
    assert!(stdout.contains("delta,fd_err,cd_err,cs_err\n"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("min_cs_err"));
}

#[test]
fn configuration_errors_exit_with_one() {
    assert_eq!(code(&izo(&["run"])), 1, "missing seed");
    assert_eq!(code(&izo(&["run", "--seed", "1", "--bogus"])), 1, "unknown flag");
    assert_eq!(code(&izo(&["run", "--seed", "1", "--param", "nonsense"])), 1, "malformed param");
    assert_eq!(code(&izo(&["run", "--seed", "1", "--function", "nope"])), 1, "unknown function");
    assert_eq!(code(&izo(&["run", "--seed", "1", "--schedule", "sc_unconstrained", "--K", "10"])), 1, "K below 2 K0");
    assert_eq!(code(&izo(&["run", "--seed", "1", "--config", "/nonexistent/cfg"])), 1, "unreadable config");
    assert_eq!(code(&izo(&["frobnicate"])), 1, "unknown command");
}

#[test]
fn numerical_abort_exits_with_two() {
    let out = izo(&["run", "--seed", "1", "--n", "10", "--set", "none", "--param", "x0=1", "--param", "tau=1e-3"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-finite iterate at k="));
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(code(&izo(&["--help"])), 0);
    assert_eq!(code(&izo(&["run", "--help"])), 0);
    assert_eq!(code(&izo(&["--version"])), 0);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "function=half_sq_norm\nn=3\nK=300\ndelta=0.01\nparam.x0=0.5\n").unwrap();
    let path = dir.path().join("out.csv");
    let out =
        izo(&["run", "--config", cfg.to_str().unwrap(), "--seed", "2", "--K", "150", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary_of(&path);
    assert_eq!(s["config"]["K"], 150);
    assert_eq!(s["config"]["n"], 3);
    assert_eq!(s["config"]["delta"], 0.01);
    assert_eq!(s["config"]["params"]["x0"], 0.5);
}

#[test]
fn json_config_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"function": "himmelblau", "schedule": "nonconvex", "set": "ball:6", "K": 120, "seed": 4, "params": {"x0": 1.0}}"#).unwrap();
    let path = dir.path().join("out.csv");
    let out = izo(&["run", "--config", cfg.to_str().unwrap(), "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(summary_of(&path)["config"]["function"], "himmelblau");
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"K": 10, "colour": "red"}"#).unwrap();
    assert_eq!(code(&izo(&["run", "--seed", "1", "--config", bad.to_str().unwrap()])), 1);
}

#[test]
fn binary_output_matches_library_and_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for p in [&a, &b] {
        let out = izo(&["pde", "--seed", "9", "--K", "2000", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&out), 0);
    }
    let first = fs::read(&a).unwrap();
    assert_eq!(first, fs::read(&b).unwrap());
    let config = ExperimentConfig::from_kv_text("seed=9\nK=2000").unwrap();
    let report = Command::Pde.execute(&config).unwrap();
    assert_eq!(String::from_utf8(first).unwrap(), report.csv);
}
