use ssarx_core::Error as CoreError;

/// CLI failure categories, mapped onto process exit codes:
/// 2 usage (handled by the argument parser), 3 data, 4 numeric.
#[derive(Debug)]
pub enum CliError {
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let msg = e.to_string();
        match e {
            CoreError::NonStationary { .. }
            | CoreError::NonStationaryEstimate
            | CoreError::DegenerateDenominator { .. }
            | CoreError::NegativeLogArgument { .. }
            | CoreError::Asymmetric { .. }
            | CoreError::NonFinite { .. } => CliError::Numeric(msg),
            _ => CliError::Data(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
