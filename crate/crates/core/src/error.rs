use thiserror::Error;

/// Errors shared by every module of the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A request exceeds a configured memory or cost cap.
    #[error("{what}: requested {requested} exceeds cap {cap}")]
    Resource {
        what: &'static str,
        requested: f64,
        cap: f64,
    },
    #[error("{what}: argument {value} outside [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("domain error: {0}")]
    Domain(String),
    /// The working precision cannot certify the requested phases.
    #[error("{what}: needs {required} digits of working precision, got {available}")]
    Precision {
        what: &'static str,
        required: u32,
        available: u32,
    },
    #[error("too close to a pole: {0}")]
    Pole(String),
    #[error("uncertified input: {0}")]
    Uncertified(String),
    #[error("calibration: {0}")]
    Calibration(String),
}

impl Error {
    /// Stable machine-readable tag, used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Resource { .. } => "resource",
            Error::OutOfRange { .. } => "out_of_range",
            Error::Domain(_) => "domain",
            Error::Precision { .. } => "precision",
            Error::Pole(_) => "pole",
            Error::Uncertified(_) => "uncertified",
            Error::Calibration(_) => "calibration",
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
