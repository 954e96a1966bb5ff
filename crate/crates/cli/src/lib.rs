//! Runner and analysis front-end for the MAQM repeater simulator:
//! configuration loading, scenario orchestration, sweeps, fits, and
//! machine-readable outputs.

pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;
pub mod sweep;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::config::Config;
use crate::error::{AppError, AppResult};
use crate::output::{Format, OutputWriter};

#[derive(Debug, Parser)]
#[command(name = "maqm", about = "Simulator for a quantum repeater node on a multicell atomic memory")]
pub struct Cli {
    /// Path to the JSON configuration.
    #[arg(long, global = true, default_value = "config/default.json")]
    pub config: PathBuf,
    /// Master seed override.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Shot-count override.
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Table format: csv or json.
    #[arg(long, global = true, default_value = "csv")]
    pub format: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Per-cell storage-lifetime table.
    Lifetime,
    /// Full entanglement-swap pipeline with tomography.
    Repeater,
    /// Six-state random-access benchmark in both read orders.
    Raqm,
    /// STIRAP transfer efficiency and crosstalk decay.
    Stirap,
    /// Source calibration and heralding statistics.
    #[command(name = "herald-stats")]
    HeraldStats,
    /// Stored-link fidelity after a configured storage time.
    Fidelity,
    /// Run a scenario across a parameter grid.
    Sweep {
        /// Scenario to sweep.
        #[arg(long)]
        scenario: String,
        /// Dotted path of the config field to vary.
        #[arg(long)]
        param: String,
        /// Comma list (`1e-4,2e-4`) or linspace `start:stop:count`.
        #[arg(long)]
        grid: String,
    },
    /// Exponential lifetime fit of an external `t,y,sigma` CSV table.
    Fit {
        /// Input data file.
        #[arg(long)]
        data: PathBuf,
    },
}

pub fn run(cli: &Cli) -> AppResult<Value> {
    let mut config = Config::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(shots) = cli.shots {
        if shots == 0 {
            return Err(AppError::config("shots must be positive"));
        }
        config.shots = shots;
    }
    let format = Format::parse(&cli.format)?;
    let writer = OutputWriter::new(&cli.out, format, config.hash(), config.seed)?;

    let summary = match &cli.command {
        Command::Lifetime => scenarios::run_scenario("lifetime", &config, &writer)?,
        Command::Repeater => scenarios::run_scenario("repeater", &config, &writer)?,
        Command::Raqm => scenarios::run_scenario("raqm", &config, &writer)?,
        Command::Stirap => scenarios::run_scenario("stirap", &config, &writer)?,
        Command::HeraldStats => scenarios::run_scenario("herald-stats", &config, &writer)?,
        Command::Fidelity => scenarios::run_scenario("fidelity", &config, &writer)?,
        Command::Sweep { scenario, param, grid } => {
            let grid = sweep::parse_grid(grid)?;
            sweep::sweep(scenario, &config, param, &grid, &writer)?
        }
        Command::Fit { data } => scenarios::fit_file(data, &writer)?,
    };
    writer.write_summary(summary.clone())?;
    Ok(Value::Object(summary))
}
