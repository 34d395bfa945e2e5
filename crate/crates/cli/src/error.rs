use std::fmt;

/// Failure of a subcommand, classified by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments, configuration or input files (exit 1).
    Usage(String),
    /// Fit non-convergence, solver non-optimal or a degenerate computation
    /// (exit 2).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numeric(_) => 2,
        }
    }

    pub fn usage(context: impl fmt::Display, e: impl fmt::Display) -> Self {
        CliError::Usage(format!("{context}: {e}"))
    }

    pub fn numeric(context: impl fmt::Display, e: impl fmt::Display) -> Self {
        CliError::Numeric(format!("{context}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
