//! Library half of the `reverbkit` binary. Every subcommand is reachable
//! through [`run`], which takes the raw argument list and returns the process
//! exit code, so tests can drive the CLI without spawning a process.

use std::ffi::OsString;
use std::fmt;
use std::path::Path;

use clap::error::ErrorKind;
use clap::Parser;

pub mod args;
pub mod benchmark;
pub mod commands;
pub mod manifest;
pub mod settings;

pub use args::{Cli, Command};
pub use benchmark::{BenchmarkPlan, BenchmarkReport, ConditionScores, Geometry};
pub use manifest::RunManifest;
pub use settings::{RunSettings, SettingsFile};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Only rate the processing chain is tuned for; others are accepted with a warning.
pub const PIPELINE_SAMPLE_RATE: u32 = 16_000;

/// A failed command: the exit code and the message printed to stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    /// Wraps a library error that concerns `path`.
    pub fn at(path: &Path, err: reverbkit::Error) -> Self {
        let code = exit_code(&err);
        Self {
            code,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<reverbkit::Error> for Failure {
    fn from(err: reverbkit::Error) -> Self {
        Self {
            code: exit_code(&err),
            message: err.to_string(),
        }
    }
}

/// Maps a library error onto the CLI's exit codes.
pub fn exit_code(err: &reverbkit::Error) -> u8 {
    use reverbkit::Error::*;
    match err {
        InvalidConfig(_) | InvalidGeometry(_) => EXIT_USAGE,
        NumericalFailure { .. } => EXIT_NUMERICAL,
        MalformedFile(_)
        | UnsupportedFormat(_)
        | Io(_)
        | SampleRateMismatch(..)
        | SignalTooShort { .. }
        | DimensionMismatch(_)
        | InvalidSignal(_)
        | NoActiveFrames => EXIT_IO,
    }
}

pub(crate) fn warn_if_unusual_rate(path: &Path, rate: u32) {
    if rate != PIPELINE_SAMPLE_RATE {
        eprintln!(
            "warning: {} is sampled at {rate} Hz; parameters are tuned for {PIPELINE_SAMPLE_RATE} Hz",
            path.display()
        );
    }
}

/// Parses `args` (including the program name) and runs the selected command.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let result = match cli.command {
        Command::Dereverb(a) => commands::dereverb(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Benchmark(a) => commands::benchmark(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.code
        }
    }
}
