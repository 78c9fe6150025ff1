//! The fixture manifest records oracle-computed ground truth for every
//! bundled program: focal line/branch totals, focal mutant counts, and the
//! fitness of the bundled suite. These tests recompute everything through
//! independent walks and hold the manifest to it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use evotest::fitness::evaluate_fitness;
use evotest::mutation::enumerate_mutants;
use evotest::suite::split_methods;
use minilang::ast::walk_stmts;
use minilang::parse_program;

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[derive(Debug, Deserialize)]
struct Manifest {
    #[serde(flatten)]
    fixtures: BTreeMap<String, FixtureEntry>,
}

#[derive(Debug, Deserialize)]
struct FixtureEntry {
    program: String,
    suite: String,
    focal_functions: usize,
    focal_lines: usize,
    focal_branch_arms: usize,
    focal_mutants: usize,
    total_statements: usize,
    suite_lcct: f64,
    suite_bcct: f64,
    suite_msct: f64,
    suite_scalar: f64,
}

fn load_manifest() -> Manifest {
    let text = std::fs::read_to_string(fixtures_dir().join("manifest.toml")).unwrap();
    toml::from_str(&text).unwrap()
}

/// Independent statement-counting walk (second traversal, not the one the
/// suite-size code uses).
fn count_statements_independent(program: &minilang::Program) -> usize {
    let mut n = 0;
    for f in &program.functions {
        walk_stmts(&f.body, &mut |_| n += 1);
    }
    n
}

#[test]
fn manifest_matches_recomputed_ground_truth() {
    let manifest = load_manifest();
    assert!(manifest.fixtures.len() >= 6, "at least six bundled fixtures");
    for (name, entry) in &manifest.fixtures {
        let source = std::fs::read_to_string(fixtures_dir().join(&entry.program)).unwrap();
        let program = parse_program(&source, &entry.program).unwrap();

        assert_eq!(
            program.focal_functions().count(),
            entry.focal_functions,
            "{name}: focal function count"
        );
        assert_eq!(
            program.focal_line_set().len(),
            entry.focal_lines,
            "{name}: focal line count"
        );
        assert_eq!(
            program.focal_branch_ids().len() * 2,
            entry.focal_branch_arms,
            "{name}: focal branch arm count"
        );
        assert_eq!(
            enumerate_mutants(&program, true).len(),
            entry.focal_mutants,
            "{name}: focal mutant count"
        );
        assert_eq!(
            count_statements_independent(&program),
            entry.total_statements,
            "{name}: total statement count"
        );
        assert!(
            count_statements_independent(&program) <= 20,
            "{name}: fixtures stay within oracle-checkable size"
        );

        let suite_source = std::fs::read_to_string(fixtures_dir().join(&entry.suite)).unwrap();
        let suite = split_methods(&suite_source, &entry.suite).unwrap();
        let score = evaluate_fitness(&suite, &program, 100_000);
        assert_eq!(score.lcct, entry.suite_lcct, "{name}: suite LCCT");
        assert_eq!(score.bcct, entry.suite_bcct, "{name}: suite BCCT");
        assert_eq!(score.msct, entry.suite_msct, "{name}: suite MSCT");
        assert_eq!(score.scalar, entry.suite_scalar, "{name}: suite scalar");
    }
}

#[test]
fn bundled_suites_pass_their_programs() {
    let manifest = load_manifest();
    for (name, entry) in &manifest.fixtures {
        let source = std::fs::read_to_string(fixtures_dir().join(&entry.program)).unwrap();
        let program = parse_program(&source, &entry.program).unwrap();
        let suite_source = std::fs::read_to_string(fixtures_dir().join(&entry.suite)).unwrap();
        let suite = split_methods(&suite_source, &entry.suite).unwrap();
        let outcomes = evotest::suite::run_all_methods(&program, &suite, 100_000);
        assert!(
            outcomes.values().all(|o| o.passed()),
            "{name}: bundled suite has failures"
        );
    }
}

/// Regenerate the manifest body. Run with
/// `cargo test -p evotest --test fixture_manifest -- --ignored --nocapture`
/// after changing a fixture, and paste the output into
/// fixtures/manifest.toml.
#[test]
#[ignore]
fn print_manifest_entries() {
    for name in ["triangle", "leap", "gcd", "digits", "clamp", "parity"] {
        let program_file = format!("{name}.mini");
        let suite_file = format!("{name}.test.mini");
        let source = std::fs::read_to_string(fixtures_dir().join(&program_file)).unwrap();
        let program = parse_program(&source, &program_file).unwrap();
        let suite_source = std::fs::read_to_string(fixtures_dir().join(&suite_file)).unwrap();
        let suite = split_methods(&suite_source, &suite_file).unwrap();
        let score = evaluate_fitness(&suite, &program, 100_000);
        println!("[{name}]");
        println!("program = \"{program_file}\"");
        println!("suite = \"{suite_file}\"");
        println!("focal_functions = {}", program.focal_functions().count());
        println!("focal_lines = {}", program.focal_line_set().len());
        println!("focal_branch_arms = {}", program.focal_branch_ids().len() * 2);
        println!("focal_mutants = {}", enumerate_mutants(&program, true).len());
        println!("total_statements = {}", count_statements_independent(&program));
        println!("suite_lcct = {:?}", score.lcct);
        println!("suite_bcct = {:?}", score.bcct);
        println!("suite_msct = {:?}", score.msct);
        println!("suite_scalar = {:?}", score.scalar);
        println!();
    }
}
