//! `skelattack`: synthesize data, train victims, run attack campaigns,
//! evaluate and export — end to end, deterministic under `--seed`.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation error, 3 runtime
//! failure.

mod commands;
mod manifest;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use commands::{attack, evaluate, export_overlay, gen_data, train};

#[derive(Parser)]
#[command(name = "skelattack", version, about = "Adversarial attacks on skeletal-motion classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic motion dataset.
    GenData(gen_data::Args),
    /// Train a victim classifier on a dataset.
    Train(train::Args),
    /// Run an attack campaign over the test split.
    Attack(attack::Args),
    /// Recompute metrics from stored (original, adversarial) pairs.
    Evaluate(evaluate::Args),
    /// Export per-frame overlay data for a result pair.
    ExportOverlay(export_overlay::Args),
}

/// Marks input/validation failures (exit 2) raised by command code.
#[derive(Debug)]
pub struct ValidationError(pub String);

impl std::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ValidationError {}

/// Marks missing/contradictory flags (exit 1) discovered after flag merging.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code_for(error: &anyhow::Error) -> i32 {
    if error.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    if error.downcast_ref::<ValidationError>().is_some() {
        return 2;
    }
    if let Some(core) = error.downcast_ref::<skelattack_core::Error>() {
        use skelattack_core::Error::*;
        return match core {
            InvalidTopology(_) | InvalidMotion(_) | ShapeMismatch { .. } | InvalidConfig(_)
            | Parse { .. } | AlreadyMisclassified { .. } | EmptyInput(_) => 2,
            Io { .. } => 3,
        };
    }
    3
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::GenData(args) => gen_data::run(args),
        Command::Train(args) => train::run(args),
        Command::Attack(args) => attack::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::ExportOverlay(args) => export_overlay::run(args),
    };
    match result {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(exit_code_for(&e));
        }
    }
}
