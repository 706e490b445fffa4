//! bellspace: simulate one generalized polarization measurement per arm and
//! read it in either outcome labeling. Physics lives in a JSON config;
//! flags carry only operational knobs (seed, draw count, output target).

mod commands;
mod config;
mod emit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub enum CliError {
    /// Bad request: config, flags, or an arm that cannot support the
    /// operation. Exit code 1.
    Validation(String),
    /// Failure while computing or writing. Exit code 2.
    Runtime(String),
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> CliError {
        CliError::Validation(e.to_string())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScanMode {
    /// Exhaustive sweep of the configured grid.
    Grid,
    /// Grid sweep followed by coordinate-search refinement.
    Refine,
}

#[derive(Parser)]
#[command(
    name = "bellspace",
    version,
    about = "Two-arm single-photon measurements: POVM reports, click statistics, Bell quantities, noise inversion, tomography and parameter scans"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (JSON)
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Write output to this file instead of stdout
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the four detector POVM elements per arm with the p(alpha) or
    /// gamma report
    Povm(CommonArgs),
    /// Compute the joint click table, optionally conditioned and
    /// marginalized
    Probs {
        #[command(flatten)]
        common: CommonArgs,
        /// Keep only these axes (comma separated), e.g. j,k
        #[arg(long, value_name = "AXES")]
        marginal: Option<String>,
        /// Condition on an event, e.g. alpha=+1 (repeatable)
        #[arg(long, value_name = "AXIS=SIGN")]
        given: Vec<String>,
    },
    /// Evaluate the standard, dual and mixed Bell quantities with window
    /// verdicts
    Bell(CommonArgs),
    /// Draw seeded Monte Carlo clicks from the joint table
    Sample {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of draws
        #[arg(long)]
        n: u64,
        /// Generator seed
        #[arg(long)]
        seed: u64,
    },
    /// Undo readout noise on a simulated or supplied click table
    Invert {
        #[command(flatten)]
        common: CommonArgs,
        /// Invert this CSV table instead of simulating one
        #[arg(long, value_name = "PATH")]
        table: Option<PathBuf>,
    },
    /// Reconstruct states from single-arm click statistics
    Tomo {
        #[command(flatten)]
        common: CommonArgs,
        /// Reconstruct from this CSV table (axes j,k) using arm A
        #[arg(long, value_name = "PATH")]
        table: Option<PathBuf>,
        /// Scale unphysical reconstructions back to the Bloch ball
        #[arg(long)]
        clamp: bool,
    },
    /// Sweep the configured parameters and report the best point
    Scan {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(value_enum, default_value_t = ScanMode::Grid)]
        mode: ScanMode,
    },
    /// Run the internal cross-check suite
    Check {
        /// Seed for the randomized checks
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("BELLSPACE_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("BELLSPACE_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Povm(common) => {
            let exp = config::load(&common.config)?;
            commands::povm(&exp, common.format, common.out.as_deref())
        }
        Command::Probs {
            common,
            marginal,
            given,
        } => {
            let exp = config::load(&common.config)?;
            commands::probs(
                &exp,
                marginal.as_deref(),
                &given,
                common.format,
                common.out.as_deref(),
            )
        }
        Command::Bell(common) => {
            let exp = config::load(&common.config)?;
            commands::bell(&exp, common.format, common.out.as_deref())
        }
        Command::Sample { common, n, seed } => {
            let exp = config::load(&common.config)?;
            commands::sample(&exp, n, seed, common.format, common.out.as_deref())
        }
        Command::Invert { common, table } => {
            let exp = config::load(&common.config)?;
            commands::invert(&exp, table.as_deref(), common.format, common.out.as_deref())
        }
        Command::Tomo {
            common,
            table,
            clamp,
        } => {
            let exp = config::load(&common.config)?;
            commands::tomo(
                &exp,
                table.as_deref(),
                clamp,
                common.format,
                common.out.as_deref(),
            )
        }
        Command::Scan { common, mode } => {
            let exp = config::load(&common.config)?;
            commands::scan(&exp, mode, common.format, common.out.as_deref())
        }
        Command::Check { seed } => commands::check(seed),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
