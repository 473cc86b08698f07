use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod output;

use config::Overrides;

/// Design and simulation tools for nth-order Bragg atom gravimeters.
#[derive(Debug, Parser)]
#[command(name = "bragg", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Record,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML run configuration (human units); flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Species: `builtin`, a bundled name, or a species TOML file
    #[arg(long, global = true, value_name = "PATH|builtin")]
    pub species: Option<String>,
    /// Directory for output files
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Seed for stochastic parts (noise, thermal sampling)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format for schedules and fit results; both are written when omitted
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate every design bound for the configured apparatus
    Requirements,
    /// Regenerate the optimal pulse-parameter table
    Table1(commands::TableArgs),
    /// Simulate fringe scans and extract gravity
    Simulate(commands::SimulateArgs),
    /// Build and validate the three-pulse timing schedule
    Sequence,
    /// Integrate the momentum ladder through one pulse
    Ladder(commands::LadderArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Requirements => commands::requirements(&cli.common),
        Command::Table1(args) => commands::table1(&cli.common, args),
        Command::Simulate(args) => commands::simulate(&cli.common, args),
        Command::Sequence => commands::sequence(&cli.common),
        Command::Ladder(args) => commands::ladder(&cli.common, args),
    };
    match result {
        Ok(commands::Status::Pass) => ExitCode::SUCCESS,
        Ok(commands::Status::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
