//! `grounding` — batch front end for the temporal grounding toolkit.
//!
//! Exit codes are a stable scripting contract: 0 success, 1 I/O failure,
//! 2 input validation failure (including flag parsing, which clap also
//! reports with exit code 2).

use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod manifest;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => commands::cmd_synth(a),
        Command::Infer(a) => commands::cmd_infer(a),
        Command::Evaluate(a) => commands::cmd_evaluate(a),
        Command::Ablate(a) => commands::cmd_ablate(a),
        Command::Render(a) => commands::cmd_render(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
