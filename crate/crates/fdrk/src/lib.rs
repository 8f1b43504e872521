//! Command-line front end for `fdrk-core`: configuration, subcommands and
//! the CSV/JSON output formats.

pub mod commands;
pub mod config;
pub mod output;

use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

use config::Settings;

#[derive(Debug, Parser)]
#[command(name = "fdrk", version, about = "Finite-difference Cash-Karp solver with global error estimates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one model and write snapshots and per-step diagnostics.
    Solve(Args),
    /// Observed convergence orders on a ladder of mesh widths.
    Order(Args),
    /// True error against the error estimate on a ladder of mesh widths.
    ErrorSweep(Args),
    /// Simulate data and sample the posterior with error-controlled refinement.
    Infer(Args),
    /// Write a synthetic data set.
    Simulate(Args),
}

#[derive(Debug, clap::Args)]
pub struct Args {
    /// TOML file with the same keys as the flags (snake_case); flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

impl Args {
    pub fn resolve(&self) -> Result<Settings> {
        let flags = self.settings.clone();
        match &self.config {
            Some(path) => Ok(Settings::from_file(path)?.overlay(flags)),
            None => Ok(flags),
        }
    }
}

pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Solve(a) => commands::solve(&a.resolve()?),
        Command::Order(a) => commands::order(&a.resolve()?),
        Command::ErrorSweep(a) => commands::error_sweep(&a.resolve()?),
        Command::Infer(a) => commands::infer(&a.resolve()?),
        Command::Simulate(a) => commands::simulate(&a.resolve()?),
    }
}
