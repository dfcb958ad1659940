use std::fmt;

use serde_json::json;

/// Failure classes with distinct exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Invalid flags or config file; nothing is written.
    Config(String),
    Module(zmoment_core::Error),
    Io(String),
    /// A report differs from its golden copy; the new files are still written.
    Regression(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Module(_) => 3,
            CliError::Io(_) => 4,
            CliError::Regression(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Module(e) => e.kind(),
            CliError::Io(_) => "io",
            CliError::Regression(_) => "regression",
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Module(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Regression(m) => write!(f, "golden mismatch: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<zmoment_core::Error> for CliError {
    fn from(e: zmoment_core::Error) -> Self {
        match e {
            zmoment_core::Error::Calibration(m) => CliError::Config(format!("calibration: {m}")),
            other => CliError::Module(other),
        }
    }
}
