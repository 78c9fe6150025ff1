//! The genetic algorithm: ranked selection, method-blending crossover,
//! LLM assertion-enrichment mutation, and elite-pool replacement under a
//! time budget.
//!
//! Under the mock backend the budget runs on a simulated clock advanced by
//! fixed per-event costs, which makes whole runs bit-reproducible; the
//! remote backend uses wall-clock time.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use minilang::ast::stmt_eq;
use minilang::{print_program, Program};

use crate::fitness::{FitnessEvaluator, FitnessScore};
use crate::llm::templates::{self, TemplateId};
use crate::llm::{strip_code_fences, Backend, CompletionRequest};
use crate::suite::{
    count_assertions, merge_with, reachable_helpers, Provenance, SuiteSize, TestMethod, TestSuite,
};

/// Assertion-mutation calls run at this fixed temperature.
pub const MUTATOR_TEMPERATURE: f64 = 0.5;

/// Simulated cost of one LLM call on the virtual clock.
pub const SIMULATED_LLM_CALL: Duration = Duration::from_millis(200);
/// Simulated cost of one fitness evaluation (cache misses only).
pub const SIMULATED_EVALUATION: Duration = Duration::from_millis(5);

const PERFECT_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct GaParams {
    pub crossover_probability: f64,
    pub time_budget: Duration,
    pub selection_pressure: f64,
    pub population_size: usize,
    pub rng_seed: u64,
    pub perfect_fitness: f64,
    pub mutation_enabled: bool,
    pub max_retries: u32,
}

impl GaParams {
    pub fn new(population_size: usize, rng_seed: u64) -> Self {
        GaParams {
            crossover_probability: 0.8,
            time_budget: Duration::from_secs(300),
            selection_pressure: 1.5,
            population_size,
            rng_seed,
            perfect_fitness: 100.0,
            mutation_enabled: true,
            max_retries: 3,
        }
    }
}

/// Budget clock: wall time for remote runs, a deterministic simulated
/// clock for mock runs.
#[derive(Debug)]
pub enum BudgetClock {
    Real(Instant),
    Virtual(Duration),
}

impl BudgetClock {
    pub fn real() -> Self {
        BudgetClock::Real(Instant::now())
    }

    pub fn simulated() -> Self {
        BudgetClock::Virtual(Duration::ZERO)
    }

    pub fn elapsed(&self) -> Duration {
        match self {
            BudgetClock::Real(start) => start.elapsed(),
            BudgetClock::Virtual(elapsed) => *elapsed,
        }
    }

    pub fn charge_llm_calls(&mut self, calls: u64) {
        if let BudgetClock::Virtual(elapsed) = self {
            *elapsed += SIMULATED_LLM_CALL * u32::try_from(calls).unwrap_or(u32::MAX);
        }
    }

    pub fn charge_evaluations(&mut self, evaluations: u64) {
        if let BudgetClock::Virtual(elapsed) = self {
            *elapsed += SIMULATED_EVALUATION * u32::try_from(evaluations).unwrap_or(u32::MAX);
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvolutionError {
    #[error("selection pool must hold at least 2 suites, got {size}")]
    PoolTooSmall { size: usize },
    #[error("initial population size {actual} does not match configured {expected}")]
    PopulationMismatch { expected: usize, actual: usize },
    #[error("crossover probability {value} is outside [0, 1]")]
    BadCrossoverProbability { value: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GenerationRecord {
    pub index: u32,
    pub best_scalar: f64,
    pub mean_scalar: f64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct EvolveOutcome {
    pub best: TestSuite,
    pub best_score: FitnessScore,
    pub generations: Vec<GenerationRecord>,
    pub early_exit: bool,
    pub mutation_attempts: u64,
    pub mutation_accepted: u64,
}

#[derive(Debug, Clone)]
struct Individual {
    suite: TestSuite,
    score: FitnessScore,
    size: SuiteSize,
}

impl Individual {
    fn new(suite: TestSuite, score: FitnessScore) -> Self {
        let size = suite.size();
        Individual { suite, score, size }
    }
}

/// Total order used everywhere a "best" suite is picked: higher scalar
/// first, then smaller size, then smaller suite id.
fn rank_cmp(a: &Individual, b: &Individual) -> std::cmp::Ordering {
    b.score
        .scalar
        .total_cmp(&a.score.scalar)
        .then(a.size.cmp(&b.size))
        .then(a.suite.suite_id.cmp(&b.suite.suite_id))
}

fn best_index(pool: &[Individual]) -> usize {
    let mut best = 0;
    for i in 1..pool.len() {
        if rank_cmp(&pool[i], &pool[best]) == std::cmp::Ordering::Less {
            best = i;
        }
    }
    best
}

fn worst_index(pool: &[Individual]) -> usize {
    let mut worst = 0;
    for i in 1..pool.len() {
        if rank_cmp(&pool[i], &pool[worst]) == std::cmp::Ordering::Greater {
            worst = i;
        }
    }
    worst
}

/// Baker-style linear ranking: selection probability for rank `r` (1-based,
/// rank 1 = best) is `(1/n) * (s - (2s-2) * (r-1) / (n-1))`.
pub fn linear_rank_probabilities(n: usize, pressure: f64) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| (pressure - (2.0 * pressure - 2.0) * i as f64 / (n as f64 - 1.0)) / n as f64)
        .collect()
}

/// Draw two parents by linear-ranked selection. The two draws are
/// independent; when they coincide, the second parent is redrawn once and
/// then accepted either way. Returns indices into `pool`.
pub fn ranked_select(
    pool: &[(FitnessScore, SuiteSize, u64)],
    pressure: f64,
    rng: &mut impl Rng,
) -> Result<(usize, usize), EvolutionError> {
    if pool.len() < 2 {
        return Err(EvolutionError::PoolTooSmall { size: pool.len() });
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by(|&a, &b| {
        pool[b]
            .0
            .scalar
            .total_cmp(&pool[a].0.scalar)
            .then(pool[a].1.cmp(&pool[b].1))
            .then(pool[a].2.cmp(&pool[b].2))
    });
    let probabilities = linear_rank_probabilities(pool.len(), pressure);
    let draw = |rng: &mut dyn RngCore| -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (rank, &index) in order.iter().enumerate() {
            acc += probabilities[rank];
            if u < acc {
                return index;
            }
        }
        *order.last().unwrap()
    };
    let first = draw(rng);
    let mut second = draw(rng);
    if second == first {
        second = draw(rng);
    }
    Ok((first, second))
}

fn sample_indices(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    let k = k.min(n);
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        indices.swap(i, j);
    }
    let mut chosen = indices[..k].to_vec();
    chosen.sort_unstable();
    chosen
}

fn subset_suite(parent: &TestSuite, indices: &[usize], id: u64) -> TestSuite {
    let methods: Vec<TestMethod> = indices
        .iter()
        .map(|&i| parent.methods[i].clone())
        .collect();
    let bodies: Vec<&minilang::Block> = methods.iter().map(|m| &m.body).collect();
    let helpers = reachable_helpers(&parent.helpers, &bodies);
    TestSuite::from_parts(
        id,
        Provenance::Crossover,
        "crossover.test.mini",
        helpers,
        methods,
    )
}

/// Method-blending crossover: offspring A inherits round(0.8 * |p1|)
/// methods sampled uniformly from parent 1 plus round(0.2 * |p2|) from
/// parent 2; offspring B receives the inverse proportions. Each offspring
/// carries the helper closure of its chosen methods, with collisions
/// renamed.
pub fn crossover(
    p1: &TestSuite,
    p2: &TestSuite,
    rng: &mut impl Rng,
    ids: (u64, u64),
) -> (TestSuite, TestSuite) {
    let share = |len: usize, fraction: f64| -> usize { (fraction * len as f64).round() as usize };

    let a_from_p1 = sample_indices(rng, p1.methods.len(), share(p1.methods.len(), 0.8));
    let a_from_p2 = sample_indices(rng, p2.methods.len(), share(p2.methods.len(), 0.2));
    let b_from_p1 = sample_indices(rng, p1.methods.len(), share(p1.methods.len(), 0.2));
    let b_from_p2 = sample_indices(rng, p2.methods.len(), share(p2.methods.len(), 0.8));

    let a = merge_with(
        &subset_suite(p1, &a_from_p1, ids.0),
        &subset_suite(p2, &a_from_p2, ids.0),
        false,
    );
    let b = merge_with(
        &subset_suite(p1, &b_from_p1, ids.1),
        &subset_suite(p2, &b_from_p2, ids.1),
        false,
    );
    (a, b)
}

#[derive(Debug, Clone, Default)]
pub struct MutationLog {
    pub selected: Vec<String>,
    pub accepted: Vec<String>,
    pub rejected: Vec<(String, String)>,
    pub llm_calls: u64,
}

#[derive(Debug, Clone)]
pub struct MutateOptions {
    pub step_budget: u64,
    pub max_retries: u32,
}

/// Assertion-enrichment mutation. Each method is independently selected
/// with probability `1 / N_tests`; a selected method is replaced only if
/// the mutator's reply re-parses to a single test method, preserves every
/// original statement as an in-order subsequence, adds one to five
/// assertions, and still passes against the unmutated program. Otherwise
/// the original method is kept.
pub fn mutate(
    suite: &TestSuite,
    program: &Program,
    backend: &dyn Backend,
    rng: &mut impl Rng,
    opts: &MutateOptions,
) -> (TestSuite, MutationLog) {
    let mut log = MutationLog::default();
    let n = suite.methods.len();
    if n == 0 {
        return (suite.clone(), log);
    }
    let probability = 1.0 / n as f64;
    let selected: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < probability).collect();

    let helpers_text = {
        let mut out = String::new();
        for h in &suite.helpers {
            out.push_str(&minilang::print_function(h));
            out.push('\n');
        }
        out
    };
    let source_text = print_program(program);

    let mut methods = suite.methods.clone();
    let mut any_accepted = false;
    for (index, selected_flag) in selected.iter().enumerate() {
        if !selected_flag {
            continue;
        }
        let original = &suite.methods[index];
        log.selected.push(original.name.clone());
        let sampling_seed = rng.next_u64();

        let mut bindings = BTreeMap::new();
        bindings.insert(templates::TEST_METHOD, original.to_source());
        bindings.insert(templates::HELPERS, helpers_text.clone());
        bindings.insert(templates::SOURCE_CODE, source_text.clone());
        let user_content = match templates::render(TemplateId::Mutator, &bindings) {
            Ok(content) => content,
            Err(e) => {
                log.rejected.push((original.name.clone(), e.to_string()));
                continue;
            }
        };
        let request = CompletionRequest {
            template: TemplateId::Mutator,
            system_prompt: templates::system_prompt(TemplateId::Mutator).to_string(),
            user_content,
            temperature: MUTATOR_TEMPERATURE,
            max_retries: opts.max_retries,
            sampling_seed,
        };
        log.llm_calls += 1;
        let reply = match backend.complete(&request) {
            Ok(response) => response.text,
            Err(e) => {
                // Backend exhaustion degrades mutation to identity.
                log.rejected.push((original.name.clone(), e.to_string()));
                continue;
            }
        };
        match validate_mutated_method(original, strip_code_fences(&reply), suite, program, opts) {
            Ok(method) => {
                methods[index] = method;
                any_accepted = true;
                log.accepted.push(original.name.clone());
            }
            Err(reason) => {
                log.rejected.push((original.name.clone(), reason));
            }
        }
    }

    if !any_accepted {
        return (suite.clone(), log);
    }
    let mutated = TestSuite::from_parts(
        suite.suite_id,
        Provenance::Mutated,
        suite.source_label.clone(),
        suite.helpers.clone(),
        methods,
    );
    (mutated, log)
}

fn validate_mutated_method(
    original: &TestMethod,
    reply: &str,
    suite: &TestSuite,
    program: &Program,
    opts: &MutateOptions,
) -> Result<TestMethod, String> {
    let decls = minilang::parse_test_file(reply).map_err(|e| format!("reply unparseable: {e}"))?;
    let tests: Vec<_> = decls.iter().filter(|d| d.is_test).collect();
    if tests.len() != 1 || decls.len() != 1 {
        return Err(format!(
            "reply must contain exactly one test method, found {} declarations",
            decls.len()
        ));
    }
    let body = tests[0].decl.body.clone();

    // Original statements must survive, in order, at the top level.
    let mut cursor = 0;
    for new_stmt in &body.stmts {
        if cursor < original.body.stmts.len() && stmt_eq(new_stmt, &original.body.stmts[cursor]) {
            cursor += 1;
        }
    }
    if cursor != original.body.stmts.len() {
        return Err("reply does not preserve the original statements".to_string());
    }

    let added = count_assertions(&body) as i64 - original.assertion_count as i64;
    if !(1..=5).contains(&added) {
        return Err(format!("reply adds {added} assertions, expected 1 to 5"));
    }

    let run = minilang::TestRun::new(program, &suite.helpers, &suite.source_label)
        .with_budget(opts.step_budget);
    let outcome = run.run_method(&original.name, &body);
    if !outcome.passed() {
        return Err(format!(
            "mutated method fails against the unmutated program: {}",
            outcome.message
        ));
    }

    let mut method = TestMethod::new(original.name.clone(), body);
    method = TestMethod {
        status: crate::suite::MethodStatus::Passing,
        ..method
    };
    Ok(method)
}

/// Run the evolutionary loop and return the highest-fitness suite.
pub fn evolve(
    initial: &[TestSuite],
    evaluator: &mut FitnessEvaluator,
    params: &GaParams,
    backend: &dyn Backend,
    clock: &mut BudgetClock,
    mut on_generation: impl FnMut(&GenerationRecord),
) -> Result<EvolveOutcome, EvolutionError> {
    if initial.len() != params.population_size {
        return Err(EvolutionError::PopulationMismatch {
            expected: params.population_size,
            actual: initial.len(),
        });
    }
    if initial.len() < 2 {
        return Err(EvolutionError::PoolTooSmall {
            size: initial.len(),
        });
    }
    if !(0.0..=1.0).contains(&params.crossover_probability) {
        return Err(EvolutionError::BadCrossoverProbability {
            value: params.crossover_probability,
        });
    }

    let perfect = params.perfect_fitness - PERFECT_EPSILON;
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut next_id = initial.iter().map(|s| s.suite_id).max().unwrap_or(0) + 1;
    let mutate_opts = MutateOptions {
        step_budget: evaluator.step_budget(),
        max_retries: params.max_retries,
    };

    let evaluate = |suite: &TestSuite, evaluator: &mut FitnessEvaluator, clock: &mut BudgetClock| {
        let (score, fresh) = evaluator.evaluate(suite);
        if fresh {
            clock.charge_evaluations(1);
        }
        score
    };

    let mut population: Vec<Individual> = initial
        .iter()
        .map(|suite| {
            let score = evaluate(suite, evaluator, clock);
            Individual::new(suite.clone(), score)
        })
        .collect();
    let best_initial = population[best_index(&population)].clone();

    let mut generations: Vec<GenerationRecord> = Vec::new();
    let mut mutation_attempts = 0u64;
    let mut mutation_accepted = 0u64;

    let finish = |ind: &Individual,
                  generations: Vec<GenerationRecord>,
                  early_exit: bool,
                  mutation_attempts: u64,
                  mutation_accepted: u64| EvolveOutcome {
        best: ind.suite.clone(),
        best_score: ind.score,
        generations,
        early_exit,
        mutation_attempts,
        mutation_accepted,
    };

    // A perfect suite in the initial pool returns immediately.
    if best_initial.score.scalar >= perfect {
        return Ok(finish(&best_initial, generations, true, 0, 0));
    }

    let mut best_so_far = best_initial.clone();

    'budget: while clock.elapsed() < params.time_budget {
        let mut pool: Vec<Individual> = Vec::with_capacity(params.population_size);
        while pool.len() < params.population_size {
            if pool.iter().any(|ind| ind.score.scalar >= perfect) {
                let best = best_index(&pool);
                return Ok(finish(
                    &pool[best],
                    generations,
                    true,
                    mutation_attempts,
                    mutation_accepted,
                ));
            }
            // Budget is checked before each parent selection.
            if clock.elapsed() >= params.time_budget {
                break 'budget;
            }

            let keys: Vec<(FitnessScore, SuiteSize, u64)> = population
                .iter()
                .map(|ind| (ind.score, ind.size, ind.suite.suite_id))
                .collect();
            let (i1, i2) = ranked_select(&keys, params.selection_pressure, &mut rng)?;
            let parent1 = &population[i1];
            let parent2 = &population[i2];

            let (mut offspring1, mut offspring2) =
                if rng.random::<f64>() < params.crossover_probability {
                    let ids = (next_id, next_id + 1);
                    next_id += 2;
                    crossover(&parent1.suite, &parent2.suite, &mut rng, ids)
                } else {
                    let a = parent1.suite.clone().with_id(next_id);
                    let b = parent2.suite.clone().with_id(next_id + 1);
                    next_id += 2;
                    (a, b)
                };

            if params.mutation_enabled {
                let (m1, log1) = mutate(&offspring1, evaluator.program(), backend, &mut rng, &mutate_opts);
                clock.charge_llm_calls(log1.llm_calls);
                mutation_attempts += log1.selected.len() as u64;
                mutation_accepted += log1.accepted.len() as u64;
                offspring1 = m1;
                let (m2, log2) = mutate(&offspring2, evaluator.program(), backend, &mut rng, &mutate_opts);
                clock.charge_llm_calls(log2.llm_calls);
                mutation_attempts += log2.selected.len() as u64;
                mutation_accepted += log2.accepted.len() as u64;
                offspring2 = m2;
            }

            let s1 = evaluate(&offspring1, evaluator, clock);
            let s2 = evaluate(&offspring2, evaluator, clock);
            let o1 = Individual::new(offspring1, s1);
            let o2 = Individual::new(offspring2, s2);

            let offspring_best = s1.scalar.max(s2.scalar);
            let parent_best = parent1.score.scalar.max(parent2.score.scalar);
            let offspring_size = o1.size.combined(o2.size);
            let parent_size = parent1.size.combined(parent2.size);
            let admit_offspring = offspring_best > parent_best
                || (offspring_best == parent_best && offspring_size <= parent_size);

            let admitted = if admit_offspring {
                [o1, o2]
            } else {
                [parent1.clone(), parent2.clone()]
            };
            for ind in admitted {
                if pool.len() >= params.population_size {
                    break;
                }
                let is_perfect = ind.score.scalar >= perfect;
                pool.push(ind);
                if is_perfect {
                    let best = best_index(&pool);
                    return Ok(finish(
                        &pool[best],
                        generations,
                        true,
                        mutation_attempts,
                        mutation_accepted,
                    ));
                }
            }
        }

        // Elitist guarantee: the generation closes holding a suite at
        // least as good as everything seen so far.
        let pool_best = best_index(&pool);
        if pool[pool_best].score.scalar < best_so_far.score.scalar {
            let worst = worst_index(&pool);
            pool[worst] = best_so_far.clone();
        }
        population = pool;
        let current_best = population[best_index(&population)].clone();
        if rank_cmp(&current_best, &best_so_far) == std::cmp::Ordering::Less {
            best_so_far = current_best;
        }

        let mean = population.iter().map(|i| i.score.scalar).sum::<f64>()
            / population.len() as f64;
        let record = GenerationRecord {
            index: generations.len() as u32 + 1,
            best_scalar: population[best_index(&population)].score.scalar,
            mean_scalar: mean,
            elapsed_seconds: clock.elapsed().as_secs_f64(),
        };
        on_generation(&record);
        generations.push(record);
    }

    // Re-inject the best initial suite if evolution lost it.
    let best_initial_hash = best_initial.suite.content_hash();
    if !population
        .iter()
        .any(|ind| ind.suite.content_hash() == best_initial_hash)
    {
        population.push(best_initial);
    }
    let best = best_index(&population);
    Ok(finish(
        &population[best].clone(),
        generations,
        false,
        mutation_attempts,
        mutation_accepted,
    ))
}
