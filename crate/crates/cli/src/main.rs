//! `vqct`: dataset generation, extractor pre-training, circuit fine-tuning,
//! sweeps and bound reports.

mod commands;
mod config;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use commands::Cli;

/// Exit statuses.
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_FORMAT: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

/// Invalid flag combinations detected after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<vqc_transfer::Error>() {
        Some(e) if e.is_format() => EXIT_FORMAT,
        Some(e) if e.is_numerical() => EXIT_NUMERICAL,
        Some(
            vqc_transfer::Error::InvalidArgument(_)
            | vqc_transfer::Error::ShapeMismatch { .. }
            | vqc_transfer::Error::Capacity { .. }
            | vqc_transfer::Error::QubitOutOfRange { .. }
            | vqc_transfer::Error::ZeroShots,
        ) => EXIT_USAGE,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let argv = match config::expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
