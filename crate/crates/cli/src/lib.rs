//! `qmeas` — command line front end for measurement scenario files.
//!
//! Subcommands:
//!
//! * `validate <file>` — parse any scenario file, report shape and class
//! * `dilate <file> [--check]` — build a meter model for an instrument and
//!   optionally compare it to the direct description on random states
//! * `ozawa verify <file>` / `ozawa build --dim D --out FILE [--seed S]`
//! * `agents run <file> [--trials N] [--format json|tsv]`
//!
//! Reports go to stdout, diagnostics to stderr. Exit codes: 0 success (and
//! verification passed where applicable), 1 unusable input, 2 verification
//! failed. Identical inputs, flags and seeds produce byte-identical reports.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

pub mod canonical;
pub mod commands;
pub mod report;
pub mod scenario;

use commands::{
    cmd_agents_run, cmd_dilate, cmd_ozawa_build, cmd_ozawa_verify, cmd_validate, CliError,
    CommandOutcome, OutputFormat,
};

#[derive(Parser)]
#[command(
    name = "qmeas",
    version,
    about = "Simulate and verify generalized quantum measurements",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a scenario file and report its shape
    Validate {
        /// Scenario file of any kind
        path: PathBuf,
    },
    /// Build a unitary meter model for an instrument file
    Dilate {
        /// Instrument scenario file
        path: PathBuf,
        /// Compare the meter model against the direct description
        #[arg(long)]
        check: bool,
        /// Random states to compare on (with --check)
        #[arg(long, default_value_t = 100)]
        states: usize,
        /// Largest accepted deviation
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Seed for the sampled states
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Two meters reading one system through a single coupling
    #[command(subcommand)]
    Ozawa(OzawaCommand),
    /// Sequential two-agent measurement simulation
    #[command(subcommand)]
    Agents(AgentsCommand),
}

#[derive(Subcommand)]
enum OzawaCommand {
    /// Check reproducibility, then sample joint meter distributions
    Verify {
        /// Ozawa scenario file
        path: PathBuf,
        /// Random input states to sample
        #[arg(long, default_value_t = 100)]
        states: usize,
        /// Largest accepted deviation
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Seed for the sampled states
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a reproducible scenario file
    Build {
        /// System dimension (also used for both meters)
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        dim: u64,
        /// Output path
        #[arg(long)]
        out: PathBuf,
        /// Draw meter bases and post-states from this seed instead of
        /// using the computational-basis scenario
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum AgentsCommand {
    /// Run seeded Monte Carlo trials of the two-agent protocol
    Run {
        /// Agents scenario file
        path: PathBuf,
        /// Number of trials
        #[arg(long, default_value_t = 10000, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        /// Monte Carlo seed
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report format
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Tsv,
}

impl From<FormatArg> for OutputFormat {
    fn from(arg: FormatArg) -> Self {
        match arg {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Tsv => OutputFormat::Tsv,
        }
    }
}

fn dispatch(cli: Cli) -> Result<CommandOutcome, CliError> {
    match cli.command {
        Command::Validate { path } => cmd_validate(&path),
        Command::Dilate {
            path,
            check,
            states,
            tol,
            seed,
        } => cmd_dilate(&path, check, states, tol, seed),
        Command::Ozawa(OzawaCommand::Verify {
            path,
            states,
            tol,
            seed,
        }) => cmd_ozawa_verify(&path, states, tol, seed),
        Command::Ozawa(OzawaCommand::Build { dim, out, seed }) => {
            cmd_ozawa_build(dim as usize, &out, seed)
        }
        Command::Agents(AgentsCommand::Run {
            path,
            trials,
            seed,
            format,
        }) => cmd_agents_run(&path, trials, seed, format.into()),
    }
}

/// Parses arguments, runs the selected command and returns the exit code.
///
/// Exit codes: 0 success (including `--help`/`--version`), 1 unusable input
/// or bad arguments, 2 a verification check failed.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            // Prints help to stdout, everything else to stderr.
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            if let Some(diagnostic) = outcome.diagnostic {
                eprintln!("{diagnostic}");
            }
            if outcome.verified {
                0
            } else {
                2
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}
