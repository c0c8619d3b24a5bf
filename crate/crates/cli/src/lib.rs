//! Batch front-end for `kgphase`: reads a JSON run configuration, runs one
//! command and writes CSV/JSON results, each paired with a manifest.

// NaN-rejecting `!(x > 0.0)` checks are intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use clap::{Parser, ValueEnum};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid configuration. The message names the field.
    Validation(String),
    /// A numerical failure, a failed invariant or an output error.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<kgphase::Error> for CliError {
    fn from(e: kgphase::Error) -> Self {
        use kgphase::Error::*;
        match e {
            InvalidGrid(_) | NonPositiveMeasure { .. } | InvalidParameter(_) | ClosedTimelikeRegion { .. } | ZeroParameter
            | NotImaginary { .. } | AxisCrossing { .. } => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Mode energies per sector (CSV).
    Spectrum,
    /// Connection samples around the scenario's parameter loop (CSV).
    Connection,
    /// Holonomy eigenphases around the loop (JSON).
    Holonomy,
    /// String geometric phases against the closed form (JSON).
    Phases,
    /// Two-component evolution and its overlap deficit (JSON).
    Evolve,
    /// Invariant suite with a pass/fail table (CSV).
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Connection => "connection",
            Command::Holonomy => "holonomy",
            Command::Phases => "phases",
            Command::Evolve => "evolve",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "kgphase", version, about = "Klein-Gordon phases and holonomies from a JSON run configuration")]
pub struct Args {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub command: Command,
    /// Seed for randomized checks; overrides the config's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Runs one command and returns the paths written.
pub fn run(args: &Args) -> Result<Vec<PathBuf>, CliError> {
    let raw = std::fs::read(&args.config)
        .map_err(|e| CliError::Validation(format!("config: cannot read {}: {e}", args.config.display())))?;
    let text = std::str::from_utf8(&raw).map_err(|_| CliError::Validation("config: not valid UTF-8".into()))?;
    let mut config = config::RunConfig::parse(text)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.output.clone())
        .ok_or_else(|| CliError::Validation("output: no output directory (use --out or set `output`)".into()))?;
    let setup = config.validate()?;
    let (artifacts, outcome) = commands::execute(args.command, &setup)?;
    let written = output::write_all(&out_dir, args.command, &setup, &raw, &artifacts)?;
    outcome.map(|_| written)
}

/// Entry point shared by the binary: runs and reports, returning the exit code.
pub fn main_with(args: &Args) -> i32 {
    match run(args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", display(&p));
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
