//! Failure classes and their exit codes.

use std::path::{Path, PathBuf};

use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_UNKNOWN_COMMAND: i32 = 64;
pub const EXIT_MALFORMED_INPUT: i32 = 65;
pub const EXIT_BUDGET: i32 = 66;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Validation,
    UnknownCommand,
    MalformedInput,
    BudgetExceeded,
    Io,
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// JSON pointer into `file`; empty string for the document root.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pointer: Option<String>,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into(), file: None, pointer: None }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Validation, message)
    }

    pub fn input(file: &Path, pointer: Option<String>, message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::MalformedInput, message: message.into(), file: Some(file.to_path_buf()), pointer }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => EXIT_VALIDATION,
            ErrorKind::UnknownCommand => EXIT_UNKNOWN_COMMAND,
            ErrorKind::MalformedInput => EXIT_MALFORMED_INPUT,
            ErrorKind::BudgetExceeded => EXIT_BUDGET,
            // Output files that cannot be written are a usage problem.
            ErrorKind::Io => EXIT_VALIDATION,
        }
    }
}

impl From<hofa_core::Error> for CliError {
    fn from(e: hofa_core::Error) -> Self {
        let kind = match e {
            hofa_core::Error::BudgetExceeded { .. } => ErrorKind::BudgetExceeded,
            hofa_core::Error::Parse(_) => ErrorKind::MalformedInput,
            _ => ErrorKind::Validation,
        };
        let mut err = Self::new(kind, e.to_string());
        if kind == ErrorKind::BudgetExceeded {
            err.message.push_str(" (pass --mc <samples> to fall back to sampling, or raise --budget)");
        }
        err
    }
}
