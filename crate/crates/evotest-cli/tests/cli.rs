//! End-to-end CLI checks driving the compiled binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn evotest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evotest"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn score_prints_triple_and_scalar() {
    let out = evotest(&[
        "score",
        fixture("triangle.mini").to_str().unwrap(),
        fixture("triangle.test.mini").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("LCCT:"));
    assert!(stdout.contains("BCCT:"));
    assert!(stdout.contains("MSCT:"));
    assert!(stdout.contains("scalar:"));
}

#[test]
fn score_rejects_bad_paths_with_exit_one() {
    let out = evotest(&["score", "nope.mini", "nope.test.mini"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mutants_listing_is_stable() {
    let a = evotest(&["mutants", fixture("clamp.mini").to_str().unwrap()]);
    let b = evotest(&["mutants", fixture("clamp.mini").to_str().unwrap()]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.lines().count() > 10);
    assert!(text.contains("RelationalBoundary"));
}

#[test]
fn parse_errors_exit_one() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    let bad = dir.join("bad.mini");
    std::fs::write(&bad, "fn broken( {").unwrap();
    let out = evotest(&["mutants", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("parse error"));
}

#[test]
fn run_emits_report_and_progress() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    let report_path = dir.join("cli-report.json");
    let out = evotest(&[
        "run",
        fixture("digits.mini").to_str().unwrap(),
        "--seed",
        "4",
        "--time-budget",
        "5",
        "--report",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("final suite:"));
    let report = std::fs::read_to_string(&report_path).unwrap();
    assert!(report.contains("\"schema_version\": 1"));
}

#[test]
fn run_without_seed_fails_fast() {
    let out = evotest(&["run", fixture("digits.mini").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("seed"));
}

#[test]
fn gen_writes_population_to_directory() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("gen-suites");
    let out = evotest(&[
        "gen",
        fixture("leap.mini").to_str().unwrap(),
        "--seed",
        "2",
        "--samples-per-strategy",
        "2",
        "--out-dir",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let entries: Vec<_> = std::fs::read_dir(&dir).unwrap().collect();
    assert_eq!(entries.len(), 10);
}

#[test]
fn config_file_is_honored_and_flags_override() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    let config_path = dir.join("evotest.toml");
    std::fs::write(
        &config_path,
        "seed = 6\n\n[ga]\ntime_budget_seconds = 3\n\n[population]\nsamples_per_strategy = 2\n",
    )
    .unwrap();
    let out = evotest(&[
        "run",
        fixture("gcd.mini").to_str().unwrap(),
        "--config",
        config_path.to_str().unwrap(),
        "--disable-ga",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("final suite:"));
    assert!(!stdout.contains("generation "), "GA disabled by flag");
}

#[test]
fn population_size_flag_must_divide() {
    let out = evotest(&[
        "run",
        fixture("gcd.mini").to_str().unwrap(),
        "--seed",
        "1",
        "--population-size",
        "12",
    ]);
    assert_eq!(out.status.code(), Some(1));
}
