use std::fmt;

use ngram_graph::Error;

/// Failure carrying the process exit code: 1 for numeric or validation
/// problems, 2 for I/O and parse problems.
pub struct CliError {
    pub code: i32,
    pub error: anyhow::Error,
}

pub type CliResult<T = ()> = Result<T, CliError>;

impl CliError {
    pub fn validation(error: impl Into<anyhow::Error>) -> Self {
        CliError { code: 1, error: error.into() }
    }

    pub fn io(error: impl Into<anyhow::Error>) -> Self {
        CliError { code: 2, error: error.into() }
    }

    pub fn context(self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        CliError { code: self.code, error: self.error.context(msg) }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Json(_) | Error::Format(_) => 2,
            _ => 1,
        };
        CliError { code, error: e.into() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::io(e)
    }
}

pub trait Context<T> {
    fn with_path(self, path: &std::path::Path) -> CliResult<T>;
}

impl<T, E: Into<CliError>> Context<T> for Result<T, E> {
    fn with_path(self, path: &std::path::Path) -> CliResult<T> {
        self.map_err(|e| e.into().context(format!("{}", path.display())))
    }
}
