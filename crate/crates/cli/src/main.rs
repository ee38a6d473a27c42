mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;
use magnifier_walk::WalkError;
use thiserror::Error;

use crate::commands::Report;
use crate::config::{Cli, Command, RunConfig};

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
}

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFICATION: u8 = 2;
const EXIT_OVERFLOW: u8 = 3;

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Walk(WalkError::WindowOverflow { .. }) => EXIT_OVERFLOW,
            CliError::Walk(WalkError::InvalidParameter { .. } | WalkError::Precondition(_)) => EXIT_USAGE,
            CliError::Walk(_) => EXIT_VERIFICATION,
            CliError::Io(_) => EXIT_USAGE,
        }
    }
}

fn write_report(report: &Report, cfg: &RunConfig) -> Result<(), CliError> {
    let mut out: Box<dyn Write> = match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    report.table.write(cfg.format, &mut out)?;
    out.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let (report, cfg) = match &cli.command {
        Command::Spectrum(a) => (commands::spectrum(a)?, &a.config),
        Command::Simulate(a) => (commands::simulate(a)?, &a.config),
        Command::Localization(a) => (commands::localization(a)?, &a.config),
        Command::Limit(a) => (commands::limit(a)?, &a.config),
        Command::Verify(a) => (commands::verify_suites(a)?, &a.config),
    };
    match write_report(&report, cfg) {
        // a closed downstream pipe (e.g. `| head`) is not an error
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => {}
        other => other?,
    }
    Ok(report.failed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("error: verification failed; see the table for the failing suites");
            ExitCode::from(EXIT_VERIFICATION)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
