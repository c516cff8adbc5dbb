//! Error type shared by all subcommands, carrying the process exit code.

use std::fmt;

/// Exit code 1: the invocation or configuration is unusable.
/// Exit code 2: the run completed but a check failed.
#[derive(Debug)]
pub enum CliError {
    /// Usage or configuration problems (exit code 1).
    Config(String),
    /// A verification check failed (exit code 2).
    Check(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn check(msg: impl Into<String>) -> Self {
        CliError::Check(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Check(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Check(msg) => write!(f, "{msg}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
