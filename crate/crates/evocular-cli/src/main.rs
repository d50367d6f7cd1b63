//! Command-line front end for the event-camera ocular liveness toolkit.
//!
//! Data flows to files (or standard output for single-line reports);
//! diagnostics go to standard error as one machine-readable JSON object per
//! failure. The process exits 0 exactly when no error occurred.

mod args;
mod commands;
mod error;
mod files;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Convert(a) => commands::cmd_convert(a),
        Command::Features(a) => commands::cmd_features(a),
        Command::Detect(a) => commands::cmd_detect(a),
        Command::Liveness(a) => commands::cmd_liveness(a),
        Command::Train(a) => commands::cmd_train(a),
        Command::Eval(a) => commands::cmd_eval(&a.mode),
        Command::Synth(a) => commands::cmd_synth(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let diag = serde_json::json!({ "error": e.to_string(), "kind": e.kind() });
            eprintln!("{diag}");
            ExitCode::FAILURE
        }
    }
}
