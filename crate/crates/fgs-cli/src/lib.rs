//! Command-line interface for forest-guided smoothing.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
//! failure.

pub mod commands;
pub mod config;
pub mod query;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::FileConfig;
use fgs::FgsError;

#[derive(Debug, Parser)]
#[command(
    name = "fgs",
    version,
    about = "Forest-guided smoothing: local linear fits, debiased intervals, and structure summaries"
)]
pub struct Cli {
    /// JSON config file supplying defaults for any flag
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a forest-guided smoother to a CSV dataset
    Fit(commands::FitArgs),
    /// Local fits with slopes at query points
    Predict(commands::PredictArgs),
    /// Debiased confidence intervals at query points
    Ci(commands::CiArgs),
    /// Slope paths with bands across resolutions
    Varimp(commands::VarimpArgs),
    /// Bandwidth barycenter, spread, and per-point summaries
    Summarize(commands::SummarizeArgs),
    /// Forest versus smoother accuracy gap
    Compare(commands::CompareArgs),
    /// Monte Carlo coverage experiments
    Simulate(commands::SimulateArgs),
}

fn exit_code(e: &FgsError) -> i32 {
    if e.is_usage() {
        1
    } else if e.is_numerical() {
        3
    } else {
        2
    }
}

/// Parses `argv` and runs the selected command, returning the process
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { 0 } else { 1 };
        }
    };
    let file = match FileConfig::load(cli.config.as_deref()) {
        Ok(file) => file,
        Err(e) => {
            eprintln!("fgs: {e}");
            return exit_code(&e);
        }
    };
    let (name, result) = match &cli.command {
        Command::Fit(args) => ("fit", commands::cmd_fit(args, &file)),
        Command::Predict(args) => ("predict", commands::cmd_predict(args, &file)),
        Command::Ci(args) => ("ci", commands::cmd_ci(args, &file)),
        Command::Varimp(args) => ("varimp", commands::cmd_varimp(args, &file)),
        Command::Summarize(args) => ("summarize", commands::cmd_summarize(args, &file)),
        Command::Compare(args) => ("compare", commands::cmd_compare(args, &file)),
        Command::Simulate(args) => ("simulate", commands::cmd_simulate(args, &file)),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("fgs {name}: {e}");
            exit_code(&e)
        }
    }
}
