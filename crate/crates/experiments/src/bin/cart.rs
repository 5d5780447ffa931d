use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use cart_experiments::{run_with_threads, ExperimentError, ExperimentKind};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Rate,
    Coverage,
    Xor,
    Diagnose,
    OracleTable,
}

impl From<Command> for ExperimentKind {
    fn from(c: Command) -> Self {
        match c {
            Command::Rate => ExperimentKind::Rate,
            Command::Coverage => ExperimentKind::Coverage,
            Command::Xor => ExperimentKind::Xor,
            Command::Diagnose => ExperimentKind::Diagnose,
            Command::OracleTable => ExperimentKind::OracleTable,
        }
    }
}

/// Run a tree/forest experiment and write rows.csv and summary.json.
#[derive(Debug, Parser)]
#[command(name = "cart", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Master seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = fs::read_to_string(&cli.config)
        .map_err(|e| ExperimentError::Config(format!("{}: {e}", cli.config.display())))
        .and_then(|text| run_with_threads(cli.command.into(), &text, cli.seed, cli.threads))
        .and_then(|output| output.write(&cli.out));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cart: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
