//! `cogload` command-line front end.
//!
//! * `simulate` writes a synthetic session, its ground truth, a matching
//!   engine config and synthetic physiology.
//! * `replay` streams a session through the engine and writes the per-loop
//!   score CSV, block means, an SVG score chart and a JSON run report.
//! * `validate` correlates block means of a score CSV with RR and EDA
//!   features.
//! * `report` prints a summary of a replay output directory.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error.

pub mod replay;
pub mod report;
pub mod simulate;
pub mod svg;
pub mod validate;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cogload_core::simulator::Archetype;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "cogload", version, about = "Online cognitive-load assessment from attention and interaction streams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic session with ground truth and physiology.
    Simulate(SimulateArgs),
    /// Stream a session through the engine.
    Replay(ReplayArgs),
    /// Correlate score blocks with RR and EDA features.
    Validate(ValidateArgs),
    /// Summarise a replay output directory.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Hhc,
    Hri,
    Hrc,
}

impl From<Scenario> for Archetype {
    fn from(s: Scenario) -> Self {
        match s {
            Scenario::Hhc => Archetype::Hhc,
            Scenario::Hri => Archetype::Hri,
            Scenario::Hrc => Archetype::Hrc,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub scenario: Scenario,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Task duration in seconds (a 60 s resting phase precedes it).
    #[arg(long, default_value_t = 600.0)]
    pub duration: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub session: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write attention and kinematics diagnostics CSVs.
    #[arg(long)]
    pub debug: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Score CSV written by `replay`.
    #[arg(long)]
    pub scores: PathBuf,
    /// RR intervals in seconds, one per line.
    #[arg(long)]
    pub rr: PathBuf,
    /// Skin conductance as `t value` lines.
    #[arg(long)]
    pub eda: PathBuf,
    #[arg(long = "block-length", default_value_t = cogload_physio::DEFAULT_BLOCK_LENGTH)]
    pub block_length: f64,
    /// Directory to write `validation.json` into; the report always goes to
    /// stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Replay output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => {
            let written = simulate::cmd_simulate(&args)?;
            for path in written.paths() {
                println!("wrote {}", path.display());
            }
        }
        Command::Replay(args) => {
            let report = replay::cmd_replay(&args)?;
            println!("{}", report::summary(&report));
        }
        Command::Validate(args) => {
            let report = validate::cmd_validate(&args)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?);
        }
        Command::Report(args) => {
            let report = report::load(&args.out)?;
            println!("{}", report::summary(&report));
        }
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
/// Errors are printed to stderr.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("error: {m}"),
                CliError::Runtime(err) => eprintln!("error: {err:#}"),
            }
            e.exit_code()
        }
    }
}
