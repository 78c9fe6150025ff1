//! `evotest` command-line interface.
//!
//! Exit codes: 0 on success, 1 for configuration or parse errors, 2 for
//! runtime failures after partial work (a partial report, if any, is
//! printed to stdout).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use evotest::config::RunConfig;
use evotest::pipeline;

#[derive(Parser)]
#[command(
    name = "evotest",
    about = "Hybrid LLM + genetic-algorithm test generation for MiniLang programs",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: generate, repair, enhance, evolve, report.
    Run(RunArgs),
    /// Score a test suite against a program (LCCT, BCCT, MSCT, scalar).
    Score {
        /// Program file (.mini)
        program: PathBuf,
        /// Test suite file (.test.mini)
        suite: PathBuf,
        #[arg(long, default_value_t = evotest::DEFAULT_STEP_BUDGET)]
        step_budget: u64,
    },
    /// List every mutant of a program, one line per mutant.
    Mutants {
        /// Program file (.mini)
        program: PathBuf,
    },
    /// Generate the initial population only and write the suites out.
    Gen(GenArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Program file (.mini)
    program: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
    /// Write the JSON run report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// GA time budget in seconds (simulated time under the mock backend).
    #[arg(long)]
    time_budget: Option<u64>,
    #[arg(long)]
    crossover_probability: Option<f64>,
    #[arg(long)]
    selection_pressure: Option<f64>,
    /// Skip the evolutionary phase; report the best initial suite.
    #[arg(long)]
    disable_ga: bool,
    /// All generation agents use A1's prompt and temperature.
    #[arg(long)]
    disable_temperature_diversity: bool,
    /// Disable the assertion-enrichment mutation operator.
    #[arg(long)]
    disable_mutation: bool,
}

#[derive(Args)]
struct GenArgs {
    /// Program file (.mini)
    program: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
    /// Directory for the emitted .test.mini suites.
    #[arg(long, default_value = "suites")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Backend: `mock` or `remote`.
    #[arg(long)]
    backend: Option<String>,
    /// Seed for the mock backend and the GA (required with `mock`).
    #[arg(long)]
    seed: Option<u64>,
    /// OpenAI-compatible base URL (remote backend).
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name (remote backend). The API key comes from the
    /// EVOTEST_API_KEY (or OPENAI_API_KEY) environment variable only.
    #[arg(long)]
    model: Option<String>,
    /// Drafts per generation strategy (population = 5x this).
    #[arg(long)]
    samples_per_strategy: Option<usize>,
    /// Total population size; must be a multiple of the strategy count.
    #[arg(long)]
    population_size: Option<usize>,
    #[arg(long)]
    step_budget: Option<u64>,
    #[arg(long)]
    max_retries: Option<u32>,
    #[arg(long)]
    in_flight_cap: Option<usize>,
    /// Probability that the mock emits a deliberately wrong expectation.
    #[arg(long)]
    wrong_expectation_rate: Option<f64>,
}

fn load_config(common: &CommonArgs, program: &std::path::Path) -> Result<RunConfig, String> {
    let mut config = match &common.config {
        Some(path) => RunConfig::from_toml_file(path).map_err(|e| e.to_string())?,
        None => RunConfig::default(),
    };
    config.program = program.to_path_buf();
    if let Some(backend) = &common.backend {
        config.backend.kind = backend.clone();
    }
    if let Some(seed) = common.seed {
        config.seed = Some(seed);
    }
    if let Some(endpoint) = &common.endpoint {
        config.backend.endpoint = Some(endpoint.clone());
    }
    if let Some(model) = &common.model {
        config.backend.model = Some(model.clone());
    }
    if let Some(samples) = common.samples_per_strategy {
        config.population.samples_per_strategy = samples;
    }
    if let Some(size) = common.population_size {
        let strategies = config.strategy_count();
        if size == 0 || size % strategies != 0 {
            return Err(format!(
                "--population-size {size} is not a positive multiple of the {strategies} strategies"
            ));
        }
        config.population.samples_per_strategy = size / strategies;
    }
    if let Some(budget) = common.step_budget {
        config.step_budget = budget;
    }
    if let Some(retries) = common.max_retries {
        config.backend.max_retries = retries;
    }
    if let Some(cap) = common.in_flight_cap {
        config.backend.in_flight_cap = cap;
    }
    if let Some(rate) = common.wrong_expectation_rate {
        config.backend.wrong_expectation_rate = rate;
    }
    Ok(config)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run_command(args),
        Command::Score {
            program,
            suite,
            step_budget,
        } => match pipeline::score(&program, &suite, step_budget) {
            Ok(score) => {
                println!("LCCT:   {:.2}", score.lcct);
                println!("BCCT:   {:.2}", score.bcct);
                println!("MSCT:   {:.2}", score.msct);
                println!("scalar: {:.2}", score.scalar);
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Mutants { program } => match pipeline::mutant_listing(&program) {
            Ok(listing) => {
                print!("{listing}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Gen(args) => gen_command(args),
    }
}

fn run_command(args: RunArgs) -> ExitCode {
    let mut config = match load_config(&args.common, &args.program) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(1);
        }
    };
    if let Some(path) = args.report {
        config.report = Some(path);
    }
    if let Some(budget) = args.time_budget {
        config.ga.time_budget_seconds = budget;
    }
    if let Some(p) = args.crossover_probability {
        config.ga.crossover_probability = p;
    }
    if let Some(s) = args.selection_pressure {
        config.ga.selection_pressure = s;
    }
    config.disable_ga = args.disable_ga;
    config.disable_temperature_diversity = args.disable_temperature_diversity;
    config.disable_mutation = args.disable_mutation;

    match pipeline::run_with_progress(&config, |record| {
        println!(
            "generation {:>3}  best {:6.2}  mean {:6.2}  elapsed {:.1}s",
            record.index, record.best_scalar, record.mean_scalar, record.elapsed_seconds
        );
    }) {
        Ok(report) => {
            println!(
                "final suite: {} methods, LCCT {:.2} BCCT {:.2} MSCT {:.2} scalar {:.2}",
                report.final_suite.method_count,
                report.final_suite.lcct,
                report.final_suite.bcct,
                report.final_suite.msct,
                report.final_suite.scalar
            );
            if config.report.is_none() {
                println!("{}", report.final_suite.source);
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn gen_command(args: GenArgs) -> ExitCode {
    let config = match load_config(&args.common, &args.program) {
        Ok(config) => config,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(1);
        }
    };
    match pipeline::generate_only(&config) {
        Ok(outcome) => {
            if let Err(e) = std::fs::create_dir_all(&args.out_dir) {
                eprintln!("error: cannot create {}: {e}", args.out_dir.display());
                return ExitCode::from(2);
            }
            for suite in &outcome.suites {
                let name = suite.provenance.to_string().replace('/', "_");
                let path = args.out_dir.join(format!("{name}.test.mini"));
                if let Err(e) = std::fs::write(&path, suite.to_source()) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
                println!(
                    "{}  methods={} repair_rounds={}",
                    path.display(),
                    suite.methods.len(),
                    outcome
                        .records
                        .iter()
                        .find(|r| r.provenance == suite.provenance)
                        .map(|r| r.repair.round)
                        .unwrap_or(0)
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(error: &pipeline::PipelineError) -> ExitCode {
    eprintln!("error: {error}");
    if let Some(report) = error.partial_report() {
        println!("{}", report.to_json());
    }
    ExitCode::from(u8::try_from(error.exit_code()).unwrap_or(2))
}
