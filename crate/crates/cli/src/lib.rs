//! The `mbe` command-line tool as a library, so commands can run in-process.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 statistical
//! failure (non-convergence, undefined estimand, unstable bootstrap).

use std::ffi::OsString;
use std::fmt;
use std::io::Write;

use clap::Parser;

pub mod args;
mod commands;
pub mod config;
pub mod report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_STATISTICAL: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn statistical(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_STATISTICAL,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<mbe_core::Error> for CliError {
    fn from(e: mbe_core::Error) -> Self {
        use mbe_core::Error as E;
        let code = match e {
            E::Config { .. }
            | E::Csv(_)
            | E::Io(_)
            | E::Json(_)
            | E::Parse { .. }
            | E::MissingProtonPlan { .. }
            | E::Dimension(_)
            | E::NonBinaryOutcome
            | E::InvalidInput(_)
            | E::Empty(_) => EXIT_INPUT,
            E::Collinear { .. }
            | E::Separation { .. }
            | E::NotConverged { .. }
            | E::UnseenCategory { .. }
            | E::EstimandUndefined(_)
            | E::UndefinedScale { .. }
            | E::UnstableBootstrap { .. }
            | E::UndefinedAuroc
            | E::TooFewForBins { .. }
            | E::ScenarioFailed { .. } => EXIT_STATISTICAL,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Human-readable output goes to `stdout`; progress and errors to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut (dyn Write + Send), stderr: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match commands::dispatch(cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code
        }
    }
}
