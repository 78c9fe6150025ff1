//! Run configuration: defaults, TOML config file loading, validation.
//! Flags from the CLI override config-file values, which override defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub const API_KEY_ENV: &str = "EVOTEST_API_KEY";
pub const API_KEY_ENV_FALLBACK: &str = "OPENAI_API_KEY";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct RunConfig {
    pub program: PathBuf,
    /// Where to write the run report; none means stdout-summary only.
    pub report: Option<PathBuf>,
    /// Master seed: drives the mock backend and the GA's RNG. Required for
    /// the mock backend.
    pub seed: Option<u64>,
    pub step_budget: u64,
    pub backend: BackendConfig,
    pub population: PopulationConfig,
    pub ga: GaConfig,
    pub disable_ga: bool,
    pub disable_temperature_diversity: bool,
    pub disable_mutation: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            program: PathBuf::new(),
            report: None,
            seed: None,
            step_budget: minilang::DEFAULT_STEP_BUDGET,
            backend: BackendConfig::default(),
            population: PopulationConfig::default(),
            ga: GaConfig::default(),
            disable_ga: false,
            disable_temperature_diversity: false,
            disable_mutation: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct BackendConfig {
    /// `mock` or `remote`.
    pub kind: String,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub wrong_expectation_rate: f64,
    pub max_retries: u32,
    pub in_flight_cap: usize,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: "mock".to_string(),
            endpoint: None,
            model: None,
            wrong_expectation_rate: 0.10,
            max_retries: 3,
            in_flight_cap: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct PopulationConfig {
    pub samples_per_strategy: usize,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            samples_per_strategy: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct GaConfig {
    pub crossover_probability: f64,
    pub time_budget_seconds: u64,
    pub selection_pressure: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            crossover_probability: 0.8,
            time_budget_seconds: 300,
            selection_pressure: 1.5,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config file {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("unknown backend kind `{0}` (expected `mock` or `remote`)")]
    UnknownBackend(String),
    #[error("the mock backend requires a seed")]
    MissingSeed,
    #[error("the remote backend requires an endpoint URL")]
    MissingEndpoint,
    #[error("the remote backend requires a model name")]
    MissingModel,
    #[error("no API key: set {API_KEY_ENV} (or {API_KEY_ENV_FALLBACK}) in the environment")]
    MissingApiKey,
    #[error("population size {0} is too small; at least 2 suites are required")]
    PopulationTooSmall(usize),
    #[error("population size {size} is not a multiple of the {strategies} strategies")]
    IndivisiblePopulation { size: usize, strategies: usize },
    #[error("crossover probability {0} is outside [0, 1]")]
    BadCrossoverProbability(f64),
    #[error("selection pressure {0} is outside (1, 2]")]
    BadSelectionPressure(f64),
    #[error("no program file given")]
    MissingProgram,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<RunConfig, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn from_toml_file(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn is_mock(&self) -> bool {
        self.backend.kind == "mock"
    }

    /// Number of distinct generation strategies after ablation flags.
    pub fn strategy_count(&self) -> usize {
        if self.disable_temperature_diversity {
            1
        } else {
            5
        }
    }

    pub fn population_size(&self) -> usize {
        self.strategy_count() * self.population.samples_per_strategy
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.program.as_os_str().is_empty() {
            return Err(ConfigError::MissingProgram);
        }
        match self.backend.kind.as_str() {
            "mock" => {
                if self.seed.is_none() {
                    return Err(ConfigError::MissingSeed);
                }
            }
            "remote" => {
                if self.backend.endpoint.is_none() {
                    return Err(ConfigError::MissingEndpoint);
                }
                if self.backend.model.is_none() {
                    return Err(ConfigError::MissingModel);
                }
            }
            other => return Err(ConfigError::UnknownBackend(other.to_string())),
        }
        if self.population_size() < 2 {
            return Err(ConfigError::PopulationTooSmall(self.population_size()));
        }
        if !(0.0..=1.0).contains(&self.ga.crossover_probability) {
            return Err(ConfigError::BadCrossoverProbability(
                self.ga.crossover_probability,
            ));
        }
        if !(self.ga.selection_pressure > 1.0 && self.ga.selection_pressure <= 2.0) {
            return Err(ConfigError::BadSelectionPressure(self.ga.selection_pressure));
        }
        Ok(())
    }

    /// Resolve the remote API key from the environment only.
    pub fn api_key() -> Result<String, ConfigError> {
        std::env::var(API_KEY_ENV)
            .or_else(|_| std::env::var(API_KEY_ENV_FALLBACK))
            .map_err(|_| ConfigError::MissingApiKey)
    }
}
