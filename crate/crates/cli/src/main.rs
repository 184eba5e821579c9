use std::process::ExitCode;

use clap::{Parser, Subcommand};
use normchain::providers::ProviderError;

mod coe;
mod eval;
mod io;
mod split;
mod tasks;
mod validate;

/// Corpus validation, adversarial splits, task files, chain runs and metrics.
#[derive(Parser)]
#[command(name = "normchain", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check every record of a corpus file.
    Validate(validate::ValidateArgs),
    /// Partition a corpus into train/dev/test.
    Split(split::SplitArgs),
    /// Build task sample files from a corpus or a split directory.
    Tasks(tasks::TasksArgs),
    /// Chain-of-experts runs.
    #[command(subcommand)]
    Coe(coe::CoeCommand),
    /// Score outputs.
    #[command(subcommand)]
    Eval(eval::EvalCommand),
}

/// Process exit status of a finished run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Validation or strict-mode failure.
    Invalid,
    /// Some provider calls failed; outputs were still written.
    ProviderFailure,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        match s {
            Status::Ok => ExitCode::SUCCESS,
            Status::Invalid => ExitCode::from(1),
            Status::ProviderFailure => ExitCode::from(3),
        }
    }
}

/// Provider failures anywhere in the cause chain exit with 3; everything
/// else is an I/O or configuration problem.
fn error_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.downcast_ref::<ProviderError>().is_some()) {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate(args) => validate::run(args),
        Command::Split(args) => split::run(args),
        Command::Tasks(args) => tasks::run(args),
        Command::Coe(cmd) => coe::run(cmd),
        Command::Eval(cmd) => eval::run(cmd),
    };
    match result {
        Ok(status) => status.into(),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(error_code(&err))
        }
    }
}
