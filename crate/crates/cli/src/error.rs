use std::fmt;
use std::path::PathBuf;

use serde_json::json;

/// Failures surfaced by the command line, each mapped to an exit status.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid configuration; exit 2.
    Config(String),
    /// A key that is not part of the configuration schema; exit 2.
    UnknownKey(String),
    /// A numerical failure from the core library; exit 1.
    Domain(connective::Error),
    /// `report` found nothing to aggregate; exit 1.
    NoResults(PathBuf),
    /// A `verify` check that ran but failed; exit 1.
    VerificationFailed(String),
    /// Reading or writing files; exit 1.
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::UnknownKey(_) => 2,
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::UnknownKey(_) => "UnknownKey",
            CliError::Domain(_) => "DomainError",
            CliError::NoResults(_) => "NoResults",
            CliError::VerificationFailed(_) => "VerificationFailed",
            CliError::Io { .. } => "IoError",
        }
    }

    /// The structured form written to standard error.
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::UnknownKey(m) => f.write_str(m),
            CliError::Domain(e) => write!(f, "{e}"),
            CliError::NoResults(dir) => write!(f, "no result files found in {}", dir.display()),
            CliError::VerificationFailed(m) => write!(f, "verification failed: {m}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<connective::Error> for CliError {
    fn from(e: connective::Error) -> Self {
        CliError::Domain(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
