//! Structured run report. Serialized as JSON with a mandatory schema
//! version; two mock runs with the same config and seed produce reports
//! that are equal in every field except wall-clock timings.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::evolution::GenerationRecord;
use crate::fitness::FitnessScore;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: RunConfig,
    pub initial_suites: Vec<InitialSuiteRecord>,
    pub generations: Vec<GenerationRecord>,
    pub final_suite: FinalSuiteRecord,
    pub mutants: Vec<MutantRecord>,
    pub llm_calls: u64,
    pub timing: TimingRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct InitialSuiteRecord {
    pub provenance: String,
    pub repair_rounds: u32,
    pub fixes_applied: Vec<String>,
    pub generation_failed: bool,
    pub method_count: usize,
    pub fitness: FitnessScore,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FinalSuiteRecord {
    pub provenance: String,
    pub source: String,
    pub method_count: usize,
    pub statement_count: usize,
    pub lcct: f64,
    pub bcct: f64,
    pub msct: f64,
    pub scalar: f64,
    pub early_exit: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MutantRecord {
    pub id: usize,
    pub operator: String,
    pub site: String,
    pub status: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TimingRecord {
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<RunReport, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn write_to(&self, path: &std::path::Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }
}

/// Compare two reports with wall-clock timings masked out.
pub fn reports_equal_ignoring_timing(a: &RunReport, b: &RunReport) -> bool {
    let mut a = a.clone();
    let mut b = b.clone();
    a.timing = TimingRecord {
        wall_clock_seconds: 0.0,
    };
    b.timing = TimingRecord {
        wall_clock_seconds: 0.0,
    };
    a == b
}
