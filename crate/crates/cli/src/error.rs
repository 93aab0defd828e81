use std::fmt;

use memkernel::Error;

/// Failure of a CLI invocation, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent input. Exit code 2.
    Validation(String),
    /// Computation failed on valid input. Exit code 3.
    Numerical(String),
    /// Output could not be written. Exit code 1.
    Io(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        Self::Validation(msg.into())
    }

    /// Classify a core error raised while handling `context`.
    pub fn from_core(e: Error, context: &str) -> Self {
        let msg = format!("{context}: {e}");
        if e.is_numerical() {
            Self::Numerical(msg)
        } else {
            Self::Validation(msg)
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 2,
            Self::Numerical(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Validation(m) => write!(f, "validation error: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
            Self::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}
