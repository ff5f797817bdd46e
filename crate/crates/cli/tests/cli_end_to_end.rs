//! End-to-end checks of the command-line interface: dataset generation,
//! plan execution, summary tables, comparison tables, and standalone
//! scoring, all through the real binary.

use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_mdlgpsr")
}

fn tmp(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "mdlgpsr_cli_{tag}_{}_{}",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .unwrap()
            .as_nanos()
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run_ok(args: &[&str]) -> String {
    let out = Command::new(binary()).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn write_plan(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("plan.txt");
    std::fs::write(&path, body).unwrap();
    path
}

const SMALL_PLAN: &str = "\
[dataset]
generator = friedman2
n = 40
sigma = 1.0

[gp]
pop_size = 16
max_gen = 2
max_len = 20
replicates = 3
base_seed = 99
";

#[test]
fn gen_data_writes_train_and_test() {
    let dir = tmp("gendata");
    run_ok(&[
        "gen-data",
        "--generator",
        "salustowicz",
        "--seed",
        "3",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let train = std::fs::read_to_string(dir.join("train.csv")).unwrap();
    let test = std::fs::read_to_string(dir.join("test.csv")).unwrap();
    assert_eq!(train.lines().count(), 101); // header + 100 rows
    assert_eq!(test.lines().count(), 221);
    assert!(train.starts_with("x0,y\n"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn run_report_compare_pipeline() {
    let dir = tmp("pipeline");
    let plan = write_plan(&dir, SMALL_PLAN);
    let artifacts = dir.join("artifacts");
    run_ok(&[
        "run",
        "--plan",
        plan.to_str().unwrap(),
        "--out",
        artifacts.to_str().unwrap(),
    ]);

    let tables = dir.join("tables");
    run_ok(&[
        "report",
        "--out",
        tables.to_str().unwrap(),
        artifacts.to_str().unwrap(),
    ]);
    for file in ["r2_summary.csv", "length_summary.csv", "delta_dl.csv"] {
        let text = std::fs::read_to_string(tables.join(file)).unwrap();
        assert!(text.lines().count() > 1, "{file} is empty");
    }
    // All five criteria summarized for the artifact directory.
    let r2 = std::fs::read_to_string(tables.join("r2_summary.csv")).unwrap();
    for criterion in ["aic", "bic", "bic_sr", "dl", "fbf"] {
        assert!(r2.contains(criterion), "missing {criterion} in r2 summary");
    }

    run_ok(&[
        "compare",
        "--out",
        tables.to_str().unwrap(),
        "--seed",
        "5",
        artifacts.to_str().unwrap(),
    ]);
    let bbt = std::fs::read_to_string(tables.join("bbt.csv")).unwrap();
    assert_eq!(bbt.lines().count(), 21); // header + 5·4 ordered pairs
    let wins = std::fs::read_to_string(tables.join("wins.csv")).unwrap();
    assert_eq!(wins.lines().count(), 6);

    // Reports are deterministic too.
    let tables2 = dir.join("tables2");
    run_ok(&[
        "report",
        "--out",
        tables2.to_str().unwrap(),
        artifacts.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read(tables.join("r2_summary.csv")).unwrap(),
        std::fs::read(tables2.join("r2_summary.csv")).unwrap()
    );
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn score_reports_all_criteria() {
    let dir = tmp("score");
    run_ok(&[
        "gen-data",
        "--generator",
        "friedman1",
        "--n",
        "60",
        "--seed",
        "11",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let out = run_ok(&[
        "score",
        "--expr",
        "1{p} * x2 + 0.5{p}",
        "--data",
        dir.join("train.csv").to_str().unwrap(),
    ]);
    for field in ["nll", "aic", "bic", "bic_sr", "dl", "fbf", "param_complexity"] {
        assert!(out.contains(field), "missing {field} in score output:\n{out}");
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn run_rejects_unknown_config_keys() {
    let dir = tmp("badkey");
    let plan = write_plan(
        &dir,
        "[dataset]\ngenerator = salustowicz\n[gp]\nelitism = 2\n",
    );
    let out = Command::new(binary())
        .args([
            "run",
            "--plan",
            plan.to_str().unwrap(),
            "--out",
            dir.join("x").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("elitism"), "stderr: {err}");
    assert!(!dir.join("x").exists(), "no artifacts on config errors");
    std::fs::remove_dir_all(&dir).unwrap();
}
