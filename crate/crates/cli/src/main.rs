use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tscausal::synthbench::{Algorithm, SUITES};
use tscausal_cli::bench::{self, BenchRequest};
use tscausal_cli::{config, pipeline, sample};

#[derive(Parser)]
#[command(name = "tscausal", version, about = "Time-series causal discovery pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Varlingam,
    Lpcmci,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check a config file without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score the estimators on a synthetic suite.
    Bench {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SUITES))]
        suite: String,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        /// Observations per simulated series.
        #[arg(long = "len", default_value_t = 2000)]
        len: usize,
        /// Truths drawn for the random suites.
        #[arg(long, default_value_t = 10)]
        truths: usize,
        #[arg(long, default_value_t = 0)]
        base_seed: u64,
        #[arg(long, value_enum, num_args = 1.., default_values_t = [AlgorithmArg::Varlingam, AlgorithmArg::Lpcmci])]
        algorithms: Vec<AlgorithmArg>,
        /// Also write the full metrics table as JSON here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Rewrite the bundled synthetic sample data file.
    #[command(hide = true)]
    SampleData { path: PathBuf },
}

fn configure_workers(workers: usize) {
    if workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
            log::warn!("worker pool not configured: {e}");
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run { config } => {
            let cfg = match config::load(&config) {
                Ok(c) => c,
                Err(diags) => {
                    for d in diags {
                        eprintln!("config error: {d}");
                    }
                    return ExitCode::from(2);
                }
            };
            configure_workers(cfg.workers);
            match pipeline::run(&cfg) {
                Ok(report) => {
                    println!("wrote {} artifacts to {}", report.artifacts.len(), cfg.output_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    eprintln!("partial report written to {}", cfg.output_dir.display());
                    ExitCode::FAILURE
                }
            }
        }
        Command::Validate { config } => {
            let diags = config::validate(&config);
            if diags.is_empty() {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            } else {
                for d in &diags {
                    println!("{d}");
                }
                ExitCode::FAILURE
            }
        }
        Command::Bench {
            suite,
            seeds,
            len,
            truths,
            base_seed,
            algorithms,
            json,
        } => {
            let req = BenchRequest {
                suite,
                seeds,
                len,
                truths,
                base_seed,
                algorithms: algorithms
                    .into_iter()
                    .map(|a| match a {
                        AlgorithmArg::Varlingam => Algorithm::VarLingam,
                        AlgorithmArg::Lpcmci => Algorithm::Lpcmci,
                    })
                    .collect(),
            };
            match bench::bench(&req) {
                Ok(table) => {
                    print!("{}", bench::markdown(&table));
                    if let Some(path) = json {
                        let text = serde_json::to_string_pretty(&table).expect("metrics serialize");
                        if let Err(e) = std::fs::write(&path, text) {
                            eprintln!("error: cannot write {}: {e}", path.display());
                            return ExitCode::FAILURE;
                        }
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
        Command::SampleData { path } => match std::fs::write(&path, sample::sample_markets_csv()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                ExitCode::FAILURE
            }
        },
    }
}
