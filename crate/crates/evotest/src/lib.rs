//! Hybrid test-suite generation for MiniLang programs.
//!
//! The pipeline has two phases. First, a pool of LLM agents with different
//! temperatures and prompt strategies drafts an initial population of test
//! suites; each draft passes through a bounded generation-repair loop and a
//! coverage-guided enhancement round. Second, a genetic algorithm refines
//! the population under a fitness function that weights mutation score
//! above branch and line coverage, using ranked selection, method-blending
//! crossover, and an LLM-backed assertion-enrichment mutation.
//!
//! Everything runs against either a real OpenAI-compatible chat endpoint
//! or a deterministic seeded mock, so whole-pipeline runs are reproducible
//! offline.

pub mod config;
pub mod evolution;
pub mod fitness;
pub mod genesis;
pub mod llm;
pub mod mutation;
pub mod pipeline;
pub mod report;
pub mod suite;

pub use config::{BackendConfig, ConfigError, RunConfig};
pub use evolution::{evolve, BudgetClock, EvolveOutcome, GaParams, GenerationRecord};
pub use fitness::{evaluate_fitness, FitnessEvaluator, FitnessScore};
pub use genesis::{
    enhance_coverage, generate_initial, preprocess_source, repair_loop, GenesisOptions,
    GenesisOutcome, PopulationSpec, RepairState,
};
pub use llm::{AgentConfig, AgentId, Backend, BackendKind, CompletionRequest, CompletionResponse};
pub use mutation::{enumerate_mutants, execute_mutants, Mutant, MutationOperator, MutationResult};
pub use pipeline::{run, PipelineError};
pub use report::RunReport;
pub use suite::{
    merge_suites, prune_failing, run_test_method, split_methods, MethodStatus, Provenance,
    SuiteSize, TestMethod, TestSuite,
};

pub use minilang::DEFAULT_STEP_BUDGET;
