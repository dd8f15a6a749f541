use std::path::PathBuf;

use thiserror::Error;

/// Which physical validity condition a run broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BreachKind {
    /// Interface left the open interval (0, L).
    InterfaceOutOfDomain,
    /// A held input q_j was not strictly positive.
    NonPositiveInput,
    /// The dynamic trigger variable m reached zero or below.
    NonPositiveTriggerVariable,
}

impl std::fmt::Display for BreachKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BreachKind::InterfaceOutOfDomain => "interface left (0, L)",
            BreachKind::NonPositiveInput => "held input q_j <= 0",
            BreachKind::NonPositiveTriggerVariable => "trigger variable m <= 0",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("argument {value} outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("singular tridiagonal system (zero pivot at row {row})")]
    SingularSystem { row: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("validity breach at t = {time} s: {kind} (value {value})")]
    Breach {
        kind: BreachKind,
        time: f64,
        value: f64,
    },

    #[error("numerical failure at t = {time} s: {message}")]
    Numerical { time: f64, message: String },

    #[error("internal consistency: {0}")]
    Consistency(String),

    #[error("initial data rejected: {0}")]
    Rejected(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors that signal a physical validity breach rather than bad input.
    pub fn is_breach(&self) -> bool {
        matches!(self, Error::Breach { .. } | Error::Numerical { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
