//! Thin command-line shell over the experiment harness.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spatialcp::experiment::{
    run_experiment, run_fit_mle, run_report, run_simulate, ExperimentConfig,
};
use spatialcp::Error;

#[derive(Parser)]
#[command(name = "spatialcp", about = "Weighted conformal prediction experiments on spatial data", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigOverrides {
    /// Experiment configuration (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory override.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of replication seeds override.
    #[arg(long)]
    seeds: Option<u64>,
    /// Dataset size per replication override.
    #[arg(long)]
    n: Option<usize>,
    /// Miscoverage level override.
    #[arg(long)]
    alpha: Option<f64>,
    /// Worker thread count (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic datasets (CSV + JSON sidecar per seed).
    Simulate(ConfigOverrides),
    /// Estimate spatial covariance parameters from a CSV dataset.
    FitMle(ConfigOverrides),
    /// Run the full (model x score x scheme) experiment grid.
    Run(ConfigOverrides),
    /// Build tables and SVG charts from a finished run.
    Report(ConfigOverrides),
}

fn load_config(overrides: &ConfigOverrides) -> Result<ExperimentConfig, Error> {
    let mut config = match &overrides.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &overrides.out {
        config.output.dir = out.display().to_string();
    }
    if let Some(seeds) = overrides.seeds {
        config.data.seeds = seeds;
    }
    if let Some(n) = overrides.n {
        config.data.n = n;
    }
    if let Some(alpha) = overrides.alpha {
        config.cp.alpha = alpha;
    }
    config.validate()?;
    if let Some(threads) = overrides.threads {
        // Ignore the error if a pool already exists (repeat calls).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(config)
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Config(_)
        | Error::InvalidFractions
        | Error::InvalidParameter(_)
        | Error::InvalidLevel
        | Error::MissingAttachment(_) => 2,
        Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_)
        | Error::MissingColumn(_)
        | Error::ParseError { .. }
        | Error::EmptyFile
        | Error::MissingResults(_)
        | Error::UnknownDistrict(_) => 3,
        Error::NotPositiveDefinite
        | Error::NonFinite
        | Error::NonFiniteInput
        | Error::RankDeficient
        | Error::TooFewSamples { .. }
        | Error::DimensionMismatch { .. }
        | Error::LengthMismatch { .. }
        | Error::EmptyScores
        | Error::NonPositiveResponse => 4,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate(overrides) => {
            let config = load_config(&overrides)?;
            let paths = run_simulate(&config)?;
            println!("wrote {} dataset(s) under {}", paths.len(), config.output.dir);
        }
        Command::FitMle(overrides) => {
            let config = load_config(&overrides)?;
            let path = run_fit_mle(&config)?;
            println!("wrote {}", path.display());
        }
        Command::Run(overrides) => {
            let config = load_config(&overrides)?;
            let paths = run_experiment(&config)?;
            println!("results written to {}", paths.out_dir.display());
        }
        Command::Report(overrides) => {
            let config = load_config(&overrides)?;
            let written = run_report(std::path::Path::new(&config.output.dir))?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}
