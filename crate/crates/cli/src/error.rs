use korteweg::Error;
use thiserror::Error as ThisError;

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONDITION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BLOW_UP: i32 = 3;

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) => core_exit_code(e),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(Error::Json(e))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Core(Error::Csv(e))
    }
}

/// Exit code for a library error.
pub fn core_exit_code(e: &Error) -> i32 {
    match e {
        Error::StabilizingCondition { .. }
        | Error::UnboundedThreshold(_)
        | Error::NonPositiveDensity { .. }
        | Error::ZeroDenominator
        | Error::Fit(_)
        | Error::Bracket { .. } => EXIT_CONDITION,
        Error::Vacuum { .. } | Error::BlowUp { .. } | Error::ImplicitSolve { .. } => EXIT_BLOW_UP,
        _ => EXIT_USAGE,
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
