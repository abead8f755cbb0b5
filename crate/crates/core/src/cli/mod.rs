//! The `semispec` command line: one JSON config in, one CSV and one JSON report out.

mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::par::{with_jobs, Exec};
use config::RunConfig;
use report::{write_atomic, Envelope};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    #[must_use]
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io(_) => 1,
            Self::Config(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}

/// Exit code when `--check` is given and a self-check fails.
pub const CHECK_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "semispec", version, about = "Semiclassical spectra, phases and tunneling in 1D")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Exit with status 4 when a self-check fails.
    #[arg(long, global = true)]
    pub check: bool,
    /// Directory for `<command>.csv` and `<command>.json`.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Predicted levels against numerical eigenvalues.
    Spectrum,
    /// Phase and amplitude of each eigenfunction at the well midpoints.
    Phases,
    /// Eigenvalue counts against action bounds.
    Weyl,
    /// Reflection and transmission through one barrier.
    Tunnel,
    /// Level splittings in a symmetric double well.
    Splitting,
}

impl Command {
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            Self::Spectrum => "spectrum",
            Self::Phases => "phases",
            Self::Weyl => "weyl",
            Self::Tunnel => "tunnel",
            Self::Splitting => "splitting",
        }
    }
}

/// Parses the process arguments, runs, and returns the exit code.
#[must_use]
pub fn run() -> i32 {
    let args = Args::parse();
    match execute(&args) {
        Ok(passed) => {
            if args.check && !passed {
                eprintln!("semispec: self-check failed");
                CHECK_FAILED
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("semispec: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command and writes its reports. Returns the self-check verdict.
pub fn execute(args: &Args) -> Result<bool, CliError> {
    let path = args.config.as_deref().ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let (config, model) = RunConfig::load(path)?;
    let exec = if args.sequential { Exec::Sequential } else { Exec::default() };
    let out = with_jobs(args.jobs, || {
        let f = match args.command {
            Command::Spectrum => commands::spectrum,
            Command::Phases => commands::phases,
            Command::Weyl => commands::weyl,
            Command::Tunnel => commands::tunnel,
            Command::Splitting => commands::splitting,
        };
        f(&config, &model, exec)
    })?;

    let name = args.command.name();
    let hash = config.hash();
    let envelope = Envelope {
        tool: "semispec",
        version: env!("CARGO_PKG_VERSION"),
        command: name,
        config_hash: &hash,
        config: &config,
        check: args.check.then_some(out.check),
        results: &out.results,
    };
    let json = serde_json::to_string_pretty(&envelope).expect("reports serialise") + "\n";
    let csv = out.table.to_csv(name, &hash);
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Io(format!("{}: {e}", args.out.display())))?;
    write_atomic(&args.out.join(format!("{name}.csv")), &csv)?;
    write_atomic(&args.out.join(format!("{name}.json")), &json)?;
    Ok(out.check)
}
