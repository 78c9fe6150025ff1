//! End-to-end run orchestration plus the standalone `score` and `mutants`
//! entry points used by the CLI.

use std::path::Path;
use std::time::{Duration, Instant};

use minilang::hash::mix64;
use minilang::{parse_program, Program};

use crate::config::{ConfigError, RunConfig};
use crate::evolution::{evolve, BudgetClock, GaParams, GenerationRecord};
use crate::fitness::{FitnessEvaluator, FitnessScore};
use crate::genesis::{generate_initial, preprocess_source, GenesisOptions, PopulationSpec};
use crate::llm::{Backend, CallCounter, MockBackend, RemoteBackend};
use crate::mutation::{enumerate_mutants, execute_mutants};
use crate::report::{
    FinalSuiteRecord, InitialSuiteRecord, MutantRecord, RunReport, TimingRecord,
    REPORT_SCHEMA_VERSION,
};
use crate::suite::{split_methods, TestSuite};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: std::path::PathBuf,
        source: minilang::ParseError,
    },
    #[error("failed to write report to {path}: {source}")]
    ReportWrite {
        path: std::path::PathBuf,
        source: std::io::Error,
        report: Box<RunReport>,
    },
    #[error("evolution failed: {0}")]
    Evolution(#[from] crate::evolution::EvolutionError),
}

impl PipelineError {
    /// Process exit code: 1 for config/parse errors, 2 for runtime
    /// failures after work started.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Io { .. } | PipelineError::Parse { .. } => 1,
            PipelineError::ReportWrite { .. } | PipelineError::Evolution(_) => 2,
        }
    }

    /// Partial report recovered from a late failure, if any.
    pub fn partial_report(&self) -> Option<&RunReport> {
        match self {
            PipelineError::ReportWrite { report, .. } => Some(report),
            _ => None,
        }
    }
}

fn read_file(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_file(path: &Path, source: &str) -> Result<Program, PipelineError> {
    parse_program(source, &path.to_string_lossy()).map_err(|source| PipelineError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn build_backend(config: &RunConfig) -> Result<Box<dyn Backend>, PipelineError> {
    match config.backend.kind.as_str() {
        "mock" => {
            let seed = config.seed.ok_or(ConfigError::MissingSeed)?;
            Ok(Box::new(
                MockBackend::new(seed)
                    .with_wrong_expectation_rate(config.backend.wrong_expectation_rate),
            ))
        }
        "remote" => {
            let endpoint = config
                .backend
                .endpoint
                .as_deref()
                .ok_or(ConfigError::MissingEndpoint)?;
            let model = config
                .backend
                .model
                .as_deref()
                .ok_or(ConfigError::MissingModel)?;
            let api_key = RunConfig::api_key()?;
            Ok(Box::new(RemoteBackend::new(endpoint, model, &api_key)))
        }
        other => Err(ConfigError::UnknownBackend(other.to_string()).into()),
    }
}

fn population_spec(config: &RunConfig) -> PopulationSpec {
    if config.disable_temperature_diversity {
        PopulationSpec::single_strategy(config.population.samples_per_strategy * 5)
    } else {
        PopulationSpec::standard(config.population.samples_per_strategy)
    }
}

/// Run the full pipeline: preprocess, generate the initial population,
/// evolve (unless disabled), and assemble the report.
pub fn run(config: &RunConfig) -> Result<RunReport, PipelineError> {
    run_with_progress(config, |_| {})
}

pub fn run_with_progress(
    config: &RunConfig,
    mut on_generation: impl FnMut(&GenerationRecord),
) -> Result<RunReport, PipelineError> {
    config.validate()?;
    let started = Instant::now();

    let raw_source = read_file(&config.program)?;
    let preprocessed =
        preprocess_source(&raw_source, &config.program.to_string_lossy()).map_err(|source| {
            PipelineError::Parse {
                path: config.program.clone(),
                source,
            }
        })?;
    let program = parse_file(&config.program, &preprocessed)?;

    let backend = CallCounter::new(build_backend(config)?);
    let spec = population_spec(config);
    let genesis_opts = GenesisOptions {
        step_budget: config.step_budget,
        max_retries: config.backend.max_retries,
        in_flight_cap: config.backend.in_flight_cap,
    };

    let genesis = generate_initial(&spec, &program, &backend, &genesis_opts);

    let mut evaluator = FitnessEvaluator::new(&program, config.step_budget);
    let initial_scores: Vec<FitnessScore> = genesis
        .suites
        .iter()
        .map(|s| evaluator.evaluate(s).0)
        .collect();

    let initial_records: Vec<InitialSuiteRecord> = genesis
        .suites
        .iter()
        .zip(&genesis.records)
        .zip(&initial_scores)
        .map(|((suite, record), score)| InitialSuiteRecord {
            provenance: record.provenance.to_string(),
            repair_rounds: record.repair.round,
            fixes_applied: record
                .repair
                .fixes_applied
                .iter()
                .map(|f| format!("{} at {}", f.kind.label(), f.location))
                .collect(),
            generation_failed: record.generation_failed,
            method_count: suite.methods.len(),
            fitness: *score,
        })
        .collect();

    let best_initial_index = best_initial(&genesis.suites, &initial_scores);
    let mut generations = Vec::new();
    let seed = config.seed.unwrap_or(0);

    let (final_suite, final_score, early_exit) = if config.disable_ga {
        let suite = genesis.suites[best_initial_index].clone();
        let score = initial_scores[best_initial_index];
        (suite, score, false)
    } else {
        let params = GaParams {
            crossover_probability: config.ga.crossover_probability,
            time_budget: Duration::from_secs(config.ga.time_budget_seconds),
            selection_pressure: config.ga.selection_pressure,
            population_size: spec.population_size(),
            rng_seed: mix64(seed, 0x6741_7275_6e73),
            perfect_fitness: 100.0,
            mutation_enabled: !config.disable_mutation,
            max_retries: config.backend.max_retries,
        };
        let mut clock = if config.is_mock() {
            BudgetClock::simulated()
        } else {
            BudgetClock::real()
        };
        let outcome = evolve(
            &genesis.suites,
            &mut evaluator,
            &params,
            &backend,
            &mut clock,
            |record| {
                on_generation(record);
                generations.push(record.clone());
            },
        )?;
        (outcome.best, outcome.best_score, outcome.early_exit)
    };

    // Kill matrix of the final suite over the focal mutants.
    let passing: Vec<String> = {
        let outcomes = crate::suite::run_all_methods(&program, &final_suite, config.step_budget);
        final_suite
            .methods
            .iter()
            .filter(|m| outcomes[&m.name].passed())
            .map(|m| m.name.clone())
            .collect()
    };
    let mutant_records: Vec<MutantRecord> =
        execute_mutants(&program, evaluator.focal_mutants(), &passing, &final_suite, config.step_budget)
            .map(|result| {
                result
                    .mutants
                    .iter()
                    .map(|m| MutantRecord {
                        id: m.mutant_id,
                        operator: m.operator.name().to_string(),
                        site: format!("{}:{}", program.source_path, m.site.line),
                        status: m.status.label().to_string(),
                    })
                    .collect()
            })
            .unwrap_or_default();

    let size = final_suite.size();
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: config.clone(),
        initial_suites: initial_records,
        generations,
        final_suite: FinalSuiteRecord {
            provenance: final_suite.provenance.to_string(),
            source: final_suite.to_source(),
            method_count: size.methods,
            statement_count: size.statements,
            lcct: final_score.lcct,
            bcct: final_score.bcct,
            msct: final_score.msct,
            scalar: final_score.scalar,
            early_exit,
        },
        mutants: mutant_records,
        llm_calls: backend.calls(),
        timing: TimingRecord {
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        },
    };

    if let Some(path) = &config.report {
        report
            .write_to(path)
            .map_err(|source| PipelineError::ReportWrite {
                path: path.clone(),
                source,
                report: Box::new(report.clone()),
            })?;
    }
    Ok(report)
}

/// Pick the best initial suite under the same total order evolution uses.
fn best_initial(suites: &[TestSuite], scores: &[FitnessScore]) -> usize {
    let mut best = 0;
    for i in 1..suites.len() {
        let better = scores[i]
            .scalar
            .total_cmp(&scores[best].scalar)
            .then(suites[best].size().cmp(&suites[i].size()).reverse())
            .then(suites[best].suite_id.cmp(&suites[i].suite_id).reverse());
        if better == std::cmp::Ordering::Greater {
            best = i;
        }
    }
    best
}

/// Standalone fitness scoring of a (program, suite) pair; exactly the
/// evaluation path the GA uses.
pub fn score(
    program_path: &Path,
    suite_path: &Path,
    step_budget: u64,
) -> Result<FitnessScore, PipelineError> {
    let program_source = read_file(program_path)?;
    let program = parse_file(program_path, &program_source)?;
    let suite_source = read_file(suite_path)?;
    let suite = split_methods(&suite_source, &suite_path.to_string_lossy()).map_err(|source| {
        PipelineError::Parse {
            path: suite_path.to_path_buf(),
            source,
        }
    })?;
    Ok(FitnessEvaluator::new(&program, step_budget).evaluate_uncached(&suite))
}

/// Deterministic mutant listing: one line per mutant.
pub fn mutant_listing(program_path: &Path) -> Result<String, PipelineError> {
    let source = read_file(program_path)?;
    let program = parse_file(program_path, &source)?;
    let mutants = enumerate_mutants(&program, false);
    let mut out = String::new();
    for m in &mutants {
        out.push_str(&format!(
            "{}\t{}\t{}:{}\t{} -> {}\n",
            m.mutant_id,
            m.operator.name(),
            program.source_path,
            m.site.line,
            m.original_fragment,
            m.mutated_fragment
        ));
    }
    Ok(out)
}

/// Genesis only: produce the initial population without evolving it.
pub fn generate_only(config: &RunConfig) -> Result<crate::genesis::GenesisOutcome, PipelineError> {
    config.validate()?;
    let raw_source = read_file(&config.program)?;
    let preprocessed =
        preprocess_source(&raw_source, &config.program.to_string_lossy()).map_err(|source| {
            PipelineError::Parse {
                path: config.program.clone(),
                source,
            }
        })?;
    let program = parse_file(&config.program, &preprocessed)?;
    let backend = build_backend(config)?;
    let spec = population_spec(config);
    let opts = GenesisOptions {
        step_budget: config.step_budget,
        max_retries: config.backend.max_retries,
        in_flight_cap: config.backend.in_flight_cap,
    };
    Ok(generate_initial(&spec, &program, &backend, &opts))
}
