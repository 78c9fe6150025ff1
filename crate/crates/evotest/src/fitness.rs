//! Fitness evaluation: line coverage, branch coverage, and mutation score
//! of the passing tests, scalarized as
//! `0.3 * BCCT + 0.2 * LCCT + 0.5 * MSCT`.

use std::collections::HashMap;

use minilang::hash::mix64;
use minilang::{merge_coverage, CoverageReport, Program};
use serde::{Deserialize, Serialize};

use crate::mutation::{enumerate_mutants, execute_mutants, Mutant};
use crate::suite::{run_all_methods, TestSuite};

pub const BCCT_WEIGHT: f64 = 0.3;
pub const LCCT_WEIGHT: f64 = 0.2;
pub const MSCT_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessScore {
    pub lcct: f64,
    pub bcct: f64,
    pub msct: f64,
    pub scalar: f64,
}

impl FitnessScore {
    pub fn new(lcct: f64, bcct: f64, msct: f64) -> Self {
        FitnessScore {
            lcct,
            bcct,
            msct,
            scalar: BCCT_WEIGHT * bcct + LCCT_WEIGHT * lcct + MSCT_WEIGHT * msct,
        }
    }

    pub fn zero() -> Self {
        FitnessScore::new(0.0, 0.0, 0.0)
    }
}

impl std::fmt::Display for FitnessScore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "LCCT {:.2} BCCT {:.2} MSCT {:.2} scalar {:.2}",
            self.lcct, self.bcct, self.msct, self.scalar
        )
    }
}

fn percent(covered: usize, total: usize) -> f64 {
    if total == 0 {
        // A vacuous metric should not poison fitness.
        100.0
    } else {
        100.0 * covered as f64 / total as f64
    }
}

/// Evaluator for one program: pre-enumerates the focal mutants and caches
/// scores by suite content hash. Evaluation itself is a pure function of
/// (suite source, program), which is what makes the cache sound.
pub struct FitnessEvaluator<'p> {
    program: &'p Program,
    program_hash: u64,
    focal_mutants: Vec<Mutant>,
    step_budget: u64,
    cache: HashMap<u64, FitnessScore>,
}

impl<'p> FitnessEvaluator<'p> {
    pub fn new(program: &'p Program, step_budget: u64) -> Self {
        FitnessEvaluator {
            program,
            program_hash: program.content_hash(),
            focal_mutants: enumerate_mutants(program, true),
            step_budget,
            cache: HashMap::new(),
        }
    }

    pub fn program(&self) -> &'p Program {
        self.program
    }

    pub fn focal_mutants(&self) -> &[Mutant] {
        &self.focal_mutants
    }

    pub fn step_budget(&self) -> u64 {
        self.step_budget
    }

    /// Cached evaluation; the bool is true when this call actually ran the
    /// suite (a cache miss).
    pub fn evaluate(&mut self, suite: &TestSuite) -> (FitnessScore, bool) {
        let key = mix64(suite.content_hash(), self.program_hash);
        if let Some(score) = self.cache.get(&key) {
            return (*score, false);
        }
        let score = self.evaluate_uncached(suite);
        self.cache.insert(key, score);
        (score, true)
    }

    /// Run every method, merge the coverage of the passing ones, and score
    /// the passing set against the focal mutants. Failing methods
    /// contribute nothing.
    pub fn evaluate_uncached(&self, suite: &TestSuite) -> FitnessScore {
        let outcomes = run_all_methods(self.program, suite, self.step_budget);
        let mut passing = Vec::new();
        let mut reports = vec![CoverageReport::for_program(self.program)];
        for method in &suite.methods {
            let outcome = &outcomes[&method.name];
            if outcome.passed() {
                passing.push(method.name.clone());
                reports.push(outcome.coverage.clone());
            }
        }
        let merged = merge_coverage(&reports).expect("reports share one program");
        let lcct = percent(merged.focal_covered_lines(self.program), merged.focal_line_total);
        let bcct = percent(
            merged.focal_covered_branch_arms(self.program),
            merged.focal_branch_arm_total,
        );
        let msct = if self.focal_mutants.is_empty() {
            100.0
        } else if passing.is_empty() {
            // Zero passing tests kill nothing; the vacuous rule does not
            // apply while mutants exist.
            0.0
        } else {
            execute_mutants(
                self.program,
                &self.focal_mutants,
                &passing,
                suite,
                self.step_budget,
            )
            .expect("enumerated mutants re-parse")
            .msct_percent
        };
        FitnessScore::new(lcct, bcct, msct)
    }
}

/// One-shot evaluation without a persistent evaluator.
pub fn evaluate_fitness(suite: &TestSuite, program: &Program, step_budget: u64) -> FitnessScore {
    FitnessEvaluator::new(program, step_budget).evaluate_uncached(suite)
}
