use std::path::{Path, PathBuf};

use evotest::config::RunConfig;
use evotest::pipeline::{self, PipelineError};
use evotest::report::{reports_equal_ignoring_timing, RunReport};

fn fixture_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn mock_config(program: &str, seed: u64) -> RunConfig {
    let mut config = RunConfig {
        program: fixture_path(program),
        seed: Some(seed),
        ..RunConfig::default()
    };
    config.ga.time_budget_seconds = 10;
    config
}

#[test]
fn full_run_produces_a_complete_report() {
    let config = mock_config("triangle.mini", 5);
    let report = pipeline::run(&config).unwrap();

    assert_eq!(report.schema_version, 1);
    assert_eq!(report.initial_suites.len(), 25);
    assert!(report.llm_calls > 0);

    let max_initial = report
        .initial_suites
        .iter()
        .map(|s| s.fitness.scalar)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        report.final_suite.scalar >= max_initial,
        "final {} must not be below best initial {}",
        report.final_suite.scalar,
        max_initial
    );
    assert!(!report.final_suite.source.is_empty());
    assert!(!report.mutants.is_empty());

    // Config echo survives serialization.
    let parsed = RunReport::from_json(&report.to_json()).unwrap();
    assert_eq!(parsed.config, config);
}

#[test]
fn disable_ga_reports_best_initial() {
    let mut config = mock_config("clamp.mini", 9);
    config.disable_ga = true;
    let report = pipeline::run(&config).unwrap();
    assert!(report.generations.is_empty());
    let max_initial = report
        .initial_suites
        .iter()
        .map(|s| s.fitness.scalar)
        .fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(report.final_suite.scalar, max_initial);
}

#[test]
fn missing_program_is_a_config_error() {
    let mut config = mock_config("does-not-exist.mini", 1);
    config.program = fixture_path("does-not-exist.mini");
    match pipeline::run(&config) {
        Err(e @ PipelineError::Io { .. }) => assert_eq!(e.exit_code(), 1),
        other => panic!("expected IO error, got {other:?}"),
    }
}

#[test]
fn mock_without_seed_is_rejected_before_any_work() {
    let mut config = mock_config("triangle.mini", 1);
    config.seed = None;
    match pipeline::run(&config) {
        Err(e @ PipelineError::Config(_)) => assert_eq!(e.exit_code(), 1),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn score_command_matches_library_evaluation() {
    let score = pipeline::score(
        &fixture_path("triangle.mini"),
        &fixture_path("triangle.test.mini"),
        100_000,
    )
    .unwrap();
    let program = minilang::parse_program(
        &std::fs::read_to_string(fixture_path("triangle.mini")).unwrap(),
        "triangle.mini",
    )
    .unwrap();
    let suite = evotest::split_methods(
        &std::fs::read_to_string(fixture_path("triangle.test.mini")).unwrap(),
        "triangle.test.mini",
    )
    .unwrap();
    let direct = evotest::fitness::evaluate_fitness(&suite, &program, 100_000);
    assert_eq!(score, direct);
}

#[test]
fn empty_suite_scores_zero() {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"));
    let suite_path = dir.join("empty.test.mini");
    std::fs::write(&suite_path, "").unwrap();
    let score = pipeline::score(&fixture_path("triangle.mini"), &suite_path, 100_000).unwrap();
    assert_eq!(score.scalar, 0.0);
    assert_eq!((score.lcct, score.bcct, score.msct), (0.0, 0.0, 0.0));
}

#[test]
fn saturated_single_function_scores_hundred() {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"));
    let program_path = dir.join("double.mini");
    let suite_path = dir.join("double.test.mini");
    std::fs::write(&program_path, "fn double(a) {\n    return a + a;\n}\n").unwrap();
    std::fs::write(
        &suite_path,
        "test kills() {\n    assert_eq(double(2), 4);\n}\n",
    )
    .unwrap();
    let score = pipeline::score(&program_path, &suite_path, 100_000).unwrap();
    assert_eq!(score.scalar, 100.0);
}

#[test]
fn mutant_listing_is_deterministic_and_formatted() {
    let listing = pipeline::mutant_listing(&fixture_path("triangle.mini")).unwrap();
    let again = pipeline::mutant_listing(&fixture_path("triangle.mini")).unwrap();
    assert_eq!(listing, again);

    let program = minilang::parse_program(
        &std::fs::read_to_string(fixture_path("triangle.mini")).unwrap(),
        "triangle.mini",
    )
    .unwrap();
    let mutants = evotest::enumerate_mutants(&program, false);
    assert_eq!(listing.lines().count(), mutants.len());

    let first = listing.lines().next().unwrap();
    let fields: Vec<&str> = first.split('\t').collect();
    assert_eq!(fields.len(), 4);
    assert_eq!(fields[0], "0");
    assert!(fields[2].contains("triangle.mini:"));
    assert!(fields[3].contains(" -> "));
}

#[test]
fn ablations_reshape_the_pipeline() {
    let mut no_diversity = mock_config("parity.mini", 3);
    no_diversity.disable_temperature_diversity = true;
    let report = pipeline::run(&no_diversity).unwrap();
    assert_eq!(report.initial_suites.len(), 25);
    assert!(report
        .initial_suites
        .iter()
        .all(|s| s.provenance.starts_with("A1/")));

    let mut no_mutation = mock_config("parity.mini", 3);
    no_mutation.disable_mutation = true;
    no_mutation.ga.time_budget_seconds = 5;
    let report = pipeline::run(&no_mutation).unwrap();
    assert!(report.final_suite.scalar >= 0.0);
}

#[test]
fn identical_seeds_reproduce_reports_modulo_timing() {
    let config = mock_config("gcd.mini", 77);
    let a = pipeline::run(&config).unwrap();
    let b = pipeline::run(&config).unwrap();
    assert!(reports_equal_ignoring_timing(&a, &b));
    assert_eq!(a.final_suite.source, b.final_suite.source);
}

#[test]
fn echoed_config_reproduces_the_final_scalar() {
    // The report is self-contained: re-running from the config it echoes
    // reproduces the final scalar.
    let config = mock_config("parity.mini", 19);
    let report = pipeline::run(&config).unwrap();
    let echoed = RunReport::from_json(&report.to_json()).unwrap().config;
    let rerun = pipeline::run(&echoed).unwrap();
    assert_eq!(rerun.final_suite.scalar, report.final_suite.scalar);
    assert_eq!(rerun.final_suite.source, report.final_suite.source);
}

#[test]
fn unwritable_report_path_is_a_runtime_error_with_partial_report() {
    let mut config = mock_config("gcd.mini", 8);
    config.ga.time_budget_seconds = 2;
    config.report = Some(PathBuf::from("/nonexistent-dir/report.json"));
    match pipeline::run(&config) {
        Err(e @ PipelineError::ReportWrite { .. }) => {
            assert_eq!(e.exit_code(), 2);
            let partial = e.partial_report().expect("partial report is carried");
            assert!(!partial.final_suite.source.is_empty());
        }
        other => panic!("expected report-write failure, got {other:?}"),
    }
}

#[test]
fn report_written_to_disk_round_trips() {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"));
    let report_path = dir.join("run-report.json");
    let mut config = mock_config("digits.mini", 11);
    config.report = Some(report_path.clone());
    config.ga.time_budget_seconds = 3;
    let report = pipeline::run(&config).unwrap();
    let loaded = RunReport::from_json(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report, loaded);
}
