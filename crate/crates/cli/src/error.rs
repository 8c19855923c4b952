use std::fmt;

use remlab_core::Error;

#[derive(Debug)]
pub enum CliError {
    /// Bad input; exit status 2.
    Invalid { field: String, reason: String },
    /// Run rejected for its size; exit status 3.
    Budget(String),
    /// Anything else, such as an unwritable output file; exit status 1.
    Io(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn invalid(field: &str, reason: impl Into<String>) -> CliError {
    CliError::Invalid { field: field.to_string(), reason: reason.into() }
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Invalid { .. } => 2,
            CliError::Budget(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            CliError::Invalid { field, reason } => format!("invalid parameter `{field}`: {reason}"),
            CliError::Budget(m) => m.clone(),
            CliError::Io(m) => m.clone(),
        };
        // diagnostics stay on one line
        write!(f, "{}", text.replace('\n', " "))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Invalid { field, reason } => CliError::Invalid { field, reason },
            Error::Budget { .. } => CliError::Budget(e.to_string()),
            Error::NotReducedCurve(m) => invalid("curve", m),
            Error::Unsupported(m) => invalid("model", m),
        }
    }
}
