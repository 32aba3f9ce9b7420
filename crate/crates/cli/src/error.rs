use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parse error in {origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("invalid scenario: {field}: {message}")]
    Validation { field: String, message: String },
    #[error("invalid option {option}: {message}")]
    Option { option: String, message: String },
    #[error("{method} failed: {source}")]
    Method { method: String, source: qrenewal::Error },
    #[error("{0}")]
    Core(#[from] qrenewal::Error),
    #[error("run-time check failed: {0}")]
    Check(String),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn invalid(field: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Validation { field: field.into(), message: message.into() }
}
