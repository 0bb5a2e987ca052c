// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cli;
mod commands;
mod output;
mod parse;

use std::process::ExitCode;

use clap::Parser;

use crate::cli::{expand_config, Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] tfqkd::Error),
    #[error("{context}: {source}")]
    Io { context: String, source: std::io::Error },
    /// The report was written but the checks did not pass.
    #[error("{0}")]
    Statistical(String),
}

impl CliError {
    pub fn io(context: &str) -> impl FnOnce(std::io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            context: context.to_string(),
            source,
        }
    }

    pub fn csv(e: csv::Error) -> CliError {
        CliError::Usage(format!("csv output: {e}"))
    }

    /// Argument errors caught by the model are usage errors.
    pub fn from_model_input(e: tfqkd::Error) -> CliError {
        match e {
            tfqkd::Error::Domain(msg) => CliError::Usage(msg),
            other => CliError::Model(other),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Statistical(_) => 1,
            CliError::Usage(_) | CliError::Io { .. } | CliError::Model(tfqkd::Error::Domain(_)) => 2,
            CliError::Model(_) => 3,
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("TFQKD_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("TFQKD_THREADS must be a positive integer, got '{raw}'")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run() -> Result<(), CliError> {
    let args = expand_config(std::env::args_os().collect())?;
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    configure_threads()?;
    match cli.command {
        Command::Surface(a) => commands::surface(&a),
        Command::Optimize(a) => commands::optimize(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Validate(a) => commands::validate(&a),
        Command::Keyrate(a) => commands::keyrate(&a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tfqkd: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
