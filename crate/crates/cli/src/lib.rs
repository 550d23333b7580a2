//! Command-line front end for the `frechet_core` simulations and sweeps.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{resolve, Overrides, RunConfig, SEED_ENV};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "frechet",
    version,
    about = "Fréchet regression simulations, sweeps and reports"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML configuration file.
    #[arg(short, long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Override any configuration key, e.g. `--set sweep.replicates=10`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Master seed (sets `sweep.master_seed` and `sim.seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output directory (`output.dir`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Existing results CSV for rate-check, report and plot (`output.results`).
    #[arg(long, global = true, value_name = "PATH")]
    pub results: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one dataset and write it as CSV.
    Simulate,
    /// Fit one estimator at every row of a dataset.
    Fit,
    /// Run a replicate sweep and write results, summary and plot.
    Sweep,
    /// Fit the loss rate and exit nonzero outside the configured band.
    RateCheck,
    /// Print the estimator comparison table.
    Report,
    /// Plot a results CSV as SVG.
    Plot {
        /// Log-scale both axes.
        #[arg(long)]
        log_axes: bool,
    },
}

/// Loads the configuration and runs the command; returns the exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> CliResult<i32> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("reading {}: {e}", p.display())))?,
        None => String::new(),
    };
    let env_seed = std::env::var(SEED_ENV).ok();
    let ov = Overrides {
        set: cli.set,
        seed: cli.seed,
        out: cli.out,
        results: cli.results,
        log_axes: matches!(cli.command, Command::Plot { log_axes: true }),
    };
    let cfg = resolve(&text, env_seed.as_deref(), &ov)?;
    match cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg).map(|_| 0),
        Command::Fit => commands::cmd_fit(&cfg).map(|_| 0),
        Command::Sweep => commands::cmd_sweep(&cfg).map(|_| 0),
        Command::RateCheck => commands::cmd_rate_check(&cfg).map(|c| if c.pass { 0 } else { 1 }),
        Command::Report => commands::cmd_report(&cfg).map(|_| 0),
        Command::Plot { .. } => commands::cmd_plot(&cfg).map(|_| 0),
    }
}
