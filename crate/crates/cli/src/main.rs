//! `qmem`: run quantum memristor ensembles, classical references, the
//! projection-frequency optimisation and step-size studies, writing CSV and
//! JSON into an output directory.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qmemristor::analysis::DEFAULT_BRACKET;
use qmemristor::presets::Preset;
use qmemristor::{AnalysisError, ParamError, SimError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<ParamError> for CliError {
    fn from(e: ParamError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Params(p) => p.into(),
            SimError::InvalidInitialState { .. } => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Sim(s) => s.into(),
            AnalysisError::InvalidBracket { .. } | AnalysisError::TooFewStepSizes | AnalysisError::InvalidStepSizes(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "qmem", version, about = "Quantum memristor hysteresis simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ensemble of conditioned trajectories.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        /// Also write trajectory_<k>.csv for these trajectory indices.
        #[arg(long, value_delimiter = ',')]
        trajectories: Vec<usize>,
    },
    /// Deterministic classical circuit.
    Classical {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Minimise the stationary noise sum over the projection frequency.
    TauOpt {
        #[arg(long, default_value_t = 0.1)]
        gamma0: f64,
        #[arg(long, default_value_t = 10.0)]
        lambda: f64,
        /// Search interval `lo,hi` (default 0.001,10).
        #[arg(long, value_parser = parse_bracket)]
        bracket: Option<(f64, f64)>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare ensemble damping rates across step sizes.
    Convergence {
        #[command(flatten)]
        run: RunArgs,
        /// Strictly descending, each an integer multiple of the last.
        #[arg(long, value_delimiter = ',', default_values_t = [4e-3, 2e-3, 1e-3, 5e-4])]
        dts: Vec<f64>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Base parameter set (default fig3b).
    #[arg(long)]
    preset: Option<Preset>,
    /// JSON object of parameters, with the initial state under `initial`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set epsilon=0` or `--set initial.mean_phi=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    traj: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    #[arg(long)]
    record_stride: Option<usize>,
}

impl RunArgs {
    fn resolve(&self) -> Result<config::RunConfig, CliError> {
        config::resolve(&config::Overrides {
            preset: self.preset,
            config: self.config.as_deref(),
            set: &self.set,
            seed: self.seed,
            traj: self.traj,
            record_stride: self.record_stride,
        })
    }

    fn workers(&self) -> Option<usize> {
        self.workers.map(|w| w as usize)
    }
}

fn parse_bracket(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"));
    Ok((num(lo)?, num(hi)?))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { run, trajectories } => commands::simulate(run.resolve()?, &run.out, run.workers(), &trajectories),
        Command::Classical { run } => commands::classical(run.resolve()?, &run.out),
        Command::TauOpt {
            gamma0,
            lambda,
            bracket,
            out,
        } => commands::tau_opt(gamma0, lambda, bracket.unwrap_or(DEFAULT_BRACKET), &out),
        Command::Convergence { run, dts } => commands::convergence(run.resolve()?, &dts, &run.out, run.workers()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
