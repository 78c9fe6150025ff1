use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use evotest::evolution::{
    crossover, evolve, linear_rank_probabilities, mutate, ranked_select, BudgetClock, GaParams,
    MutateOptions,
};
use evotest::fitness::{evaluate_fitness, FitnessEvaluator, FitnessScore};
use evotest::genesis::{generate_initial, GenesisOptions, PopulationSpec};
use evotest::llm::{Backend, BackendKind, CompletionRequest, CompletionResponse, LlmError, MockBackend};
use evotest::suite::{split_methods, SuiteSize, TestSuite};
use evotest::mutation::{apply_mutant, enumerate_mutants};
use minilang::{merge_coverage, parse_program, CoverageReport};

fn fixture(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    std::fs::read_to_string(path).expect("fixture readable")
}

#[test]
fn fitness_formula_matches_stated_examples() {
    let all = FitnessScore::new(100.0, 100.0, 100.0);
    assert_eq!(all.scalar, 100.0);
    // LCCT 100, BCCT 50, MSCT 80
    let mixed = FitnessScore::new(100.0, 50.0, 80.0);
    assert_eq!(mixed.scalar, 75.0);
}

#[test]
fn triangle_fitness_matches_independent_oracle() {
    // Recompute every metric through a separate code path: per-test runs,
    // manual set union, manual focal filtering, and a full-run mutant
    // oracle without short-circuiting.
    let program = parse_program(&fixture("triangle.mini"), "triangle.mini").unwrap();
    let suite = split_methods(&fixture("triangle.test.mini"), "triangle.test.mini").unwrap();

    let outcomes = evotest::suite::run_all_methods(&program, &suite, 100_000);
    let mut reports = vec![CoverageReport::for_program(&program)];
    let mut passing: Vec<String> = Vec::new();
    for m in &suite.methods {
        if outcomes[&m.name].passed() {
            passing.push(m.name.clone());
            reports.push(outcomes[&m.name].coverage.clone());
        }
    }
    let merged = merge_coverage(&reports).unwrap();
    let focal_lines = program.focal_line_set();
    let covered_lines = merged
        .executed_lines
        .iter()
        .filter(|l| focal_lines.contains(*l))
        .count();
    let oracle_lcct = 100.0 * covered_lines as f64 / focal_lines.len() as f64;
    let focal_branches = program.focal_branch_ids();
    let covered_arms = merged
        .branch_outcomes
        .iter()
        .filter(|(id, _)| focal_branches.contains(id))
        .count();
    let oracle_bcct = 100.0 * covered_arms as f64 / (focal_branches.len() * 2) as f64;

    let mutants = enumerate_mutants(&program, true);
    let mut killed = 0;
    for mutant in &mutants {
        let mutated = apply_mutant(&program, mutant).unwrap();
        let any_failure = passing
            .iter()
            .any(|t| !evotest::suite::run_test_method(&mutated, &suite, t, 100_000).passed());
        if any_failure {
            killed += 1;
        }
    }
    let oracle_msct = 100.0 * killed as f64 / mutants.len() as f64;

    let score = evaluate_fitness(&suite, &program, 100_000);
    assert_eq!(score.lcct, oracle_lcct);
    assert_eq!(score.bcct, oracle_bcct);
    assert_eq!(score.msct, oracle_msct);
    assert_eq!(
        score.scalar,
        0.3 * oracle_bcct + 0.2 * oracle_lcct + 0.5 * oracle_msct
    );
}

#[test]
fn empty_suite_scores_zero_when_mutants_exist() {
    let program = parse_program(&fixture("triangle.mini"), "triangle.mini").unwrap();
    let suite = split_methods("", "empty.test.mini").unwrap();
    let score = evaluate_fitness(&suite, &program, 100_000);
    assert_eq!((score.lcct, score.bcct, score.msct, score.scalar), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn fitness_evaluation_is_pure_and_cached() {
    let program = parse_program(&fixture("clamp.mini"), "clamp.mini").unwrap();
    let suite = split_methods(&fixture("clamp.test.mini"), "clamp.test.mini").unwrap();
    let mut evaluator = FitnessEvaluator::new(&program, 100_000);
    let (first, fresh1) = evaluator.evaluate(&suite);
    let (second, fresh2) = evaluator.evaluate(&suite);
    assert!(fresh1);
    assert!(!fresh2);
    assert_eq!(first, second);
    assert_eq!(first, evaluator.evaluate_uncached(&suite));
}

#[test]
fn rank_probabilities_match_closed_form() {
    let p = linear_rank_probabilities(3, 1.5);
    assert!((p[0] - 0.5).abs() < 1e-12);
    assert!((p[1] - 1.0 / 3.0).abs() < 1e-12);
    assert!((p[2] - 1.0 / 6.0).abs() < 1e-12);

    // s = 1 degenerates to uniform
    for probability in linear_rank_probabilities(7, 1.0) {
        assert!((probability - 1.0 / 7.0).abs() < 1e-12);
    }

    for n in [2usize, 5, 10, 25] {
        let sum: f64 = linear_rank_probabilities(n, 1.5).iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}

fn keyed_pool(scalars: &[f64]) -> Vec<(FitnessScore, SuiteSize, u64)> {
    scalars
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            (
                FitnessScore::new(s, s, s),
                SuiteSize { methods: 1, statements: 1 },
                i as u64,
            )
        })
        .collect()
}

#[test]
fn selection_requires_two_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(ranked_select(&keyed_pool(&[50.0]), 1.5, &mut rng).is_err());
}

#[test]
fn selection_frequencies_track_rank_probabilities() {
    let pool = keyed_pool(&[90.0, 70.0, 50.0, 30.0, 20.0, 15.0, 10.0, 8.0, 5.0, 1.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut counts = vec![0usize; pool.len()];
    let draws = 20_000;
    for _ in 0..draws {
        let (a, b) = ranked_select(&pool, 1.5, &mut rng).unwrap();
        counts[a] += 1;
        counts[b] += 1;
    }
    // Index equals rank here because scalars are already descending. The
    // redraw-on-coincidence rule nudges frequencies, so use a loose bound.
    let probabilities = linear_rank_probabilities(pool.len(), 1.5);
    for (rank, &count) in counts.iter().enumerate() {
        let observed = count as f64 / (2.0 * draws as f64);
        assert!(
            (observed - probabilities[rank]).abs() < 0.02,
            "rank {rank}: observed {observed}, expected {}",
            probabilities[rank]
        );
    }
}

#[test]
fn selection_depends_on_ranks_not_scalar_magnitudes() {
    // Multiplying every scalar by a positive constant leaves the seeded
    // draw sequence unchanged: selection is rank-based.
    let base = keyed_pool(&[90.0, 70.0, 50.0, 30.0, 10.0]);
    let scaled: Vec<_> = base
        .iter()
        .map(|(score, size, id)| {
            (
                FitnessScore::new(score.lcct * 0.37, score.bcct * 0.37, score.msct * 0.37),
                *size,
                *id,
            )
        })
        .collect();
    let mut rng_a = ChaCha8Rng::seed_from_u64(17);
    let mut rng_b = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..500 {
        let a = ranked_select(&base, 1.5, &mut rng_a).unwrap();
        let b = ranked_select(&scaled, 1.5, &mut rng_b).unwrap();
        assert_eq!(a, b);
    }
}

fn suite_with_methods(label: &str, count: usize) -> TestSuite {
    let mut source = String::new();
    for i in 0..count {
        source.push_str(&format!(
            "test {label}_{i}() {{\n    assert_eq({i}, {i});\n}}\n\n"
        ));
    }
    split_methods(&source, &format!("{label}.test.mini")).unwrap()
}

#[test]
fn crossover_proportions_on_ten_by_ten() {
    let p1 = suite_with_methods("left", 10);
    let p2 = suite_with_methods("right", 10);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (a, b) = crossover(&p1, &p2, &mut rng, (100, 101));
    assert_eq!(a.methods.len(), 10, "8 + 2");
    assert_eq!(b.methods.len(), 10, "2 + 8");
    let from_left = |s: &TestSuite| s.methods.iter().filter(|m| m.name.starts_with("left")).count();
    assert_eq!(from_left(&a), 8);
    assert_eq!(from_left(&b), 2);
    assert_eq!(a.provenance, evotest::Provenance::Crossover);
}

#[test]
fn crossover_rounding_on_three_by_five() {
    let p1 = suite_with_methods("left", 3);
    let p2 = suite_with_methods("right", 5);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (a, b) = crossover(&p1, &p2, &mut rng, (100, 101));
    // round(0.8*3) = 2 plus round(0.2*5) = 1
    assert_eq!(a.methods.len(), 3);
    // round(0.2*3) = 1 plus round(0.8*5) = 4
    assert_eq!(b.methods.len(), 5);
}

#[test]
fn crossover_of_empty_parents_is_empty() {
    let p1 = suite_with_methods("left", 0);
    let p2 = suite_with_methods("right", 0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (a, b) = crossover(&p1, &p2, &mut rng, (100, 101));
    assert!(a.methods.is_empty());
    assert!(b.methods.is_empty());
}

#[test]
fn crossover_carries_helper_closures() {
    let p1 = split_methods(
        "fn helper_one(x) {\n    return x + 1;\n}\n\ntest t0() {\n    assert_eq(helper_one(1), 2);\n}\n",
        "a.test.mini",
    )
    .unwrap();
    let p2 = split_methods(
        "fn helper_two(x) {\n    return x * 2;\n}\n\ntest t1() {\n    assert_eq(helper_two(2), 4);\n}\n",
        "b.test.mini",
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let (a, b) = crossover(&p1, &p2, &mut rng, (10, 11));
        for offspring in [&a, &b] {
            for method in &offspring.methods {
                let mut called: Vec<String> = Vec::new();
                minilang::ast::walk_exprs(&method.body, &mut |e| {
                    if let minilang::ExprKind::Call { callee, .. } = &e.kind {
                        called.push(callee.clone());
                    }
                });
                for callee in called {
                    if callee.starts_with("helper") {
                        assert!(
                            offspring.helpers.iter().any(|h| h.name == callee),
                            "offspring must carry helper {callee}"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn single_method_suite_is_always_attempted() {
    let program = parse_program(&fixture("gcd.mini"), "gcd.mini").unwrap();
    let suite = split_methods(
        "test only() {\n    assert_eq(gcd(9, 4), 1);\n}\n",
        "s.test.mini",
    )
    .unwrap();
    let backend = MockBackend::new(4).with_wrong_expectation_rate(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let opts = MutateOptions { step_budget: 100_000, max_retries: 0 };
    let (_, log) = mutate(&suite, &program, &backend, &mut rng, &opts);
    assert_eq!(log.selected, vec!["only".to_string()]);
}

#[test]
fn accepted_mutation_adds_passing_assertions() {
    let program = parse_program(&fixture("gcd.mini"), "gcd.mini").unwrap();
    let suite = split_methods(
        "test only() {\n    assert_eq(gcd(9, 4), 1);\n}\n",
        "s.test.mini",
    )
    .unwrap();
    let backend = MockBackend::new(4).with_wrong_expectation_rate(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let opts = MutateOptions { step_budget: 100_000, max_retries: 0 };
    let (mutated, log) = mutate(&suite, &program, &backend, &mut rng, &opts);
    assert_eq!(log.accepted.len(), 1, "rejections: {:?}", log.rejected);
    let method = &mutated.methods[0];
    assert!(method.assertion_count > 1);
    assert!(method.assertion_count <= 6);
    assert!(
        evotest::suite::run_test_method(&program, &mutated, "only", 100_000).passed()
    );
    // original statement preserved as a prefix
    assert!(method.to_source().contains("assert_eq(gcd(9, 4), 1);"));
    assert_eq!(mutated.provenance, evotest::Provenance::Mutated);
}

/// Backend that echoes the test method back unchanged.
struct IdentityBackend;

impl Backend for IdentityBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        let text = request
            .user_content
            .split("Test method:\n")
            .nth(1)
            .and_then(|rest| rest.split("\nHelper functions:").next())
            .unwrap_or("")
            .to_string();
        Ok(CompletionResponse {
            text,
            backend: BackendKind::Mock,
            latency: std::time::Duration::ZERO,
            prompt_tokens: 0,
            completion_tokens: 0,
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Mock
    }
}

#[test]
fn identity_replies_are_rejected_but_counted() {
    let program = parse_program(&fixture("gcd.mini"), "gcd.mini").unwrap();
    let suite = suite_with_methods("t", 5);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let opts = MutateOptions { step_budget: 100_000, max_retries: 0 };
    let mut selected_total = 0usize;
    for _ in 0..200 {
        let (out, log) = mutate(&suite, &program, &IdentityBackend, &mut rng, &opts);
        assert!(log.accepted.is_empty(), "identity adds no assertions");
        assert_eq!(out.to_source(), suite.to_source());
        selected_total += log.selected.len();
    }
    // Expectation is 1 per trial.
    let mean = selected_total as f64 / 200.0;
    assert!((mean - 1.0).abs() < 0.25, "mean selected {mean}");
}

/// Backend that always fails; mutation degrades to identity.
struct DownBackend;

impl Backend for DownBackend {
    fn complete(&self, _request: &CompletionRequest) -> Result<CompletionResponse, LlmError> {
        Err(LlmError::RemoteUnavailable {
            attempts: 1,
            last: "down".to_string(),
        })
    }

    fn kind(&self) -> BackendKind {
        BackendKind::Remote
    }
}

#[test]
fn perfect_initial_suite_returns_immediately() {
    let program = parse_program("fn double(a) {\n    return a + a;\n}\n", "p.mini").unwrap();
    let perfect = split_methods(
        "test kills() {\n    assert_eq(double(2), 4);\n}\n",
        "perfect.test.mini",
    )
    .unwrap()
    .with_id(0);
    let weak = split_methods("", "weak.test.mini").unwrap().with_id(1);
    let mut evaluator = FitnessEvaluator::new(&program, 100_000);
    assert_eq!(evaluator.evaluate(&perfect).0.scalar, 100.0);

    let params = GaParams::new(2, 7);
    let mut clock = BudgetClock::simulated();
    let outcome = evolve(
        &[perfect.clone(), weak],
        &mut evaluator,
        &params,
        &DownBackend,
        &mut clock,
        |_| {},
    )
    .unwrap();
    assert!(outcome.early_exit);
    assert!(outcome.generations.is_empty());
    assert_eq!(outcome.best_score.scalar, 100.0);
    assert_eq!(outcome.best.to_source(), perfect.to_source());
}

#[test]
fn zero_budget_returns_best_initial() {
    let program = parse_program(&fixture("clamp.mini"), "clamp.mini").unwrap();
    let backend = MockBackend::new(31);
    let genesis = generate_initial(
        &PopulationSpec::standard(2),
        &program,
        &backend,
        &GenesisOptions::default(),
    );
    let mut evaluator = FitnessEvaluator::new(&program, 100_000);
    let best_initial_scalar = genesis
        .suites
        .iter()
        .map(|s| evaluator.evaluate(s).0.scalar)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut params = GaParams::new(10, 3);
    params.time_budget = std::time::Duration::ZERO;
    let mut clock = BudgetClock::simulated();
    let outcome = evolve(
        &genesis.suites,
        &mut evaluator,
        &params,
        &backend,
        &mut clock,
        |_| {},
    )
    .unwrap();
    assert!(outcome.generations.is_empty());
    assert_eq!(outcome.best_score.scalar, best_initial_scalar);
}

#[test]
fn evolution_improves_and_stays_monotone() {
    let program = parse_program(&fixture("triangle.mini"), "triangle.mini").unwrap();
    let backend = MockBackend::new(2);
    let genesis = generate_initial(
        &PopulationSpec::standard(5),
        &program,
        &backend,
        &GenesisOptions::default(),
    );
    let mut evaluator = FitnessEvaluator::new(&program, 100_000);
    let best_initial = genesis
        .suites
        .iter()
        .map(|s| evaluator.evaluate(s).0.scalar)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut params = GaParams::new(25, 41);
    params.time_budget = std::time::Duration::from_secs(20);
    let mut clock = BudgetClock::simulated();
    let mut seen = Vec::new();
    let outcome = evolve(
        &genesis.suites,
        &mut evaluator,
        &params,
        &backend,
        &mut clock,
        |record| seen.push(record.best_scalar),
    )
    .unwrap();

    for window in seen.windows(2) {
        assert!(window[1] >= window[0], "best scalar regressed: {seen:?}");
    }
    if let Some(&first) = seen.first() {
        assert!(first >= best_initial);
    }
    assert!(outcome.best_score.scalar >= best_initial);
}

#[test]
fn dead_backend_degrades_mutation_but_still_evolves() {
    let program = parse_program(&fixture("digits.mini"), "digits.mini").unwrap();
    let mock = MockBackend::new(13);
    let genesis = generate_initial(
        &PopulationSpec::standard(2),
        &program,
        &mock,
        &GenesisOptions::default(),
    );
    let mut evaluator = FitnessEvaluator::new(&program, 100_000);
    let best_initial = genesis
        .suites
        .iter()
        .map(|s| evaluator.evaluate(s).0.scalar)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut params = GaParams::new(10, 5);
    params.time_budget = std::time::Duration::from_secs(5);
    let mut clock = BudgetClock::simulated();
    let outcome = evolve(
        &genesis.suites,
        &mut evaluator,
        &params,
        &DownBackend,
        &mut clock,
        |_| {},
    )
    .unwrap();
    assert!(outcome.best_score.scalar >= best_initial);
    assert_eq!(outcome.mutation_accepted, 0);
}

#[test]
fn virtual_clock_charges_fixed_costs() {
    let mut clock = BudgetClock::simulated();
    assert_eq!(clock.elapsed(), std::time::Duration::ZERO);
    clock.charge_llm_calls(2);
    clock.charge_evaluations(3);
    assert_eq!(
        clock.elapsed(),
        evotest::evolution::SIMULATED_LLM_CALL * 2 + evotest::evolution::SIMULATED_EVALUATION * 3
    );
}
