//! `golf-dns` command-line entry point.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use config::{DatasetArgs, ForestArgs, RunArgs, SelectArgs, SweepArgs, TrainArgs};

#[derive(Parser, Debug)]
#[command(
    name = "golf-dns",
    version,
    about = "Leading-forest label selection and GCN benchmarks"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
pub(crate) struct GlobalArgs {
    /// Settings file (JSON or TOML), or a previous run manifest. Flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Where to write the run manifest.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory searched for `<name>.golf` when --dataset is a bare name.
    #[arg(long, global = true, env = "GOLF_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    /// Only errors on stderr.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
pub(crate) enum Command {
    /// Print node, edge, class and feature counts.
    Info {
        #[command(flatten)]
        data: DatasetArgs,
        /// Write the statistics as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the leading forest and export it as JSON.
    Golf {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        forest: ForestArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Select a label set.
    Select {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        forest: ForestArgs,
        #[command(flatten)]
        select: SelectArgs,
        /// Exhaustive search instead of the greedy selector (small graphs only).
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and evaluate one GCN.
    Train {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        forest: ForestArgs,
        #[command(flatten)]
        select: SelectArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the trained weights as JSON.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Repeated runs with random or selected label sets.
    Experiment {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        forest: ForestArgs,
        #[command(flatten)]
        select: SelectArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-run accuracies as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// One selected-label experiment per value of a selection parameter.
    Sweep {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        forest: ForestArgs,
        #[command(flatten)]
        select: SelectArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Random versus selected labels at one or more rates, as a table.
    Compare {
        #[command(flatten)]
        data: DatasetArgs,
        #[command(flatten)]
        forest: ForestArgs,
        #[command(flatten)]
        select: SelectArgs,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Error with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub const USAGE: u8 = 2;
    pub const FORMAT: u8 = 3;
    pub const VALIDATION: u8 = 4;
    pub const INFEASIBLE: u8 = 5;
    pub const RUNTIME: u8 = 6;

    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: Self::USAGE,
            message: message.into(),
        }
    }

    pub fn format(message: impl Into<String>) -> Self {
        CliError {
            code: Self::FORMAT,
            message: message.into(),
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError {
            code: Self::RUNTIME,
            message: message.into(),
        }
    }
}

impl From<golf_dns::Error> for CliError {
    fn from(e: golf_dns::Error) -> Self {
        use golf_dns::Error as E;
        let code = match &e {
            E::Format { .. } | E::Container(_) | E::Io { .. } | E::Json(_) => CliError::FORMAT,
            E::Validation(_) => CliError::VALIDATION,
            E::Infeasible { .. } | E::Parameter(_) | E::SizeGuard { .. } => CliError::INFEASIBLE,
            E::Contract(_) | E::Divergence { .. } => CliError::RUNTIME,
        };
        let message = match &e {
            E::Validation(violations) => {
                let listed: Vec<String> = violations
                    .iter()
                    .take(10)
                    .map(|v| format!("{v:?}"))
                    .collect();
                format!(
                    "{} invariant violations: {}",
                    violations.len(),
                    listed.join("; ")
                )
            }
            _ => e.to_string(),
        };
        CliError { code, message }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CliError::USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match (cli.global.quiet, cli.global.verbose) {
        (true, _) => "error",
        (false, 0) => "warn",
        (false, 1) => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match commands::run(cli.global, cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
