//! Line and branch coverage accounting.
//!
//! A report records every `(function, line)` whose statement executed and
//! every `(branch, arm)` outcome observed, restricted to functions of the
//! program under test. Focal totals are captured when the report is
//! created so percentages can be derived later without the program.

use std::collections::BTreeSet;

use crate::ast::{walk_stmts, BranchId, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BranchArm {
    Then,
    Else,
}

impl BranchArm {
    pub fn label(self) -> &'static str {
        match self {
            BranchArm::Then => "then",
            BranchArm::Else => "else",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    program_id: u64,
    pub executed_lines: BTreeSet<(String, u32)>,
    pub branch_outcomes: BTreeSet<(BranchId, BranchArm)>,
    pub focal_line_total: usize,
    pub focal_branch_arm_total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoverageMergeError {
    #[error("cannot merge an empty list of coverage reports")]
    Empty,
    #[error("coverage reports were produced against different programs")]
    ProgramMismatch,
}

impl CoverageReport {
    /// An empty report scoped to `program`.
    pub fn for_program(program: &Program) -> Self {
        CoverageReport {
            program_id: program.content_hash(),
            executed_lines: BTreeSet::new(),
            branch_outcomes: BTreeSet::new(),
            focal_line_total: program.focal_line_set().len(),
            focal_branch_arm_total: program.focal_branch_ids().len() * 2,
        }
    }

    pub fn program_id(&self) -> u64 {
        self.program_id
    }

    pub(crate) fn record_line(&mut self, function: &str, line: u32) {
        self.executed_lines.insert((function.to_string(), line));
    }

    pub(crate) fn record_branch(&mut self, branch: BranchId, arm: BranchArm) {
        self.branch_outcomes.insert((branch, arm));
    }

    pub fn focal_covered_lines(&self, program: &Program) -> usize {
        let focal = program.focal_line_set();
        self.executed_lines.iter().filter(|l| focal.contains(*l)).count()
    }

    pub fn focal_covered_branch_arms(&self, program: &Program) -> usize {
        let focal = program.focal_branch_ids();
        self.branch_outcomes
            .iter()
            .filter(|(id, _)| focal.contains(id))
            .count()
    }

    /// Focal `(function, line)` pairs never executed, sorted.
    pub fn missed_focal_lines(&self, program: &Program) -> Vec<(String, u32)> {
        program
            .focal_line_set()
            .into_iter()
            .filter(|l| !self.executed_lines.contains(l))
            .collect()
    }

    /// Focal branch arms never observed, as `(function, line, branch, arm)`,
    /// sorted by function then line then arm.
    pub fn missed_focal_branch_arms(&self, program: &Program) -> Vec<(String, u32, BranchId, BranchArm)> {
        let mut missed = Vec::new();
        for id in program.focal_branch_ids() {
            let info = &program.branch_index[&id];
            for arm in [BranchArm::Then, BranchArm::Else] {
                if !self.branch_outcomes.contains(&(id, arm)) {
                    missed.push((info.function.clone(), info.line, id, arm));
                }
            }
        }
        missed.sort();
        missed
    }

    pub fn is_focal_complete(&self, program: &Program) -> bool {
        self.focal_covered_lines(program) == self.focal_line_total
            && self.focal_covered_branch_arms(program) == self.focal_branch_arm_total
    }

    /// Union another report into this one. Callers must have checked
    /// program identity.
    fn absorb(&mut self, other: &CoverageReport) {
        self.executed_lines
            .extend(other.executed_lines.iter().cloned());
        self.branch_outcomes.extend(other.branch_outcomes.iter());
    }
}

/// Set-union of coverage reports produced against the same program.
pub fn merge_coverage(reports: &[CoverageReport]) -> Result<CoverageReport, CoverageMergeError> {
    let first = reports.first().ok_or(CoverageMergeError::Empty)?;
    let mut merged = first.clone();
    for report in &reports[1..] {
        if report.program_id != merged.program_id {
            return Err(CoverageMergeError::ProgramMismatch);
        }
        merged.absorb(report);
    }
    Ok(merged)
}

/// Total focal statements declared in `program`, counting nested ones.
/// Used by fixture manifests to cross-check totals.
pub fn focal_statement_count(program: &Program) -> usize {
    let mut n = 0;
    for f in program.focal_functions() {
        walk_stmts(&f.body, &mut |_| n += 1);
    }
    n
}
