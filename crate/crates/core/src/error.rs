use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown unit type `{0}`")]
    UnknownUnitType(String),

    #[error("unit type `{unit_type}` has no parameter `{name}`")]
    UnknownParameter { unit_type: String, name: String },

    #[error("unit type `{unit_type}` has no port `{port}`")]
    UnknownPort { unit_type: String, port: String },

    #[error("port `{port}` is an {actual} port, expected {expected}")]
    WrongDirection {
        port: String,
        expected: &'static str,
        actual: &'static str,
    },

    #[error("non-finite value {value} for `{name}`")]
    NonFinite { name: String, value: f64 },

    #[error("invalid step size {0}: must be positive and finite")]
    InvalidStep(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unit type `{unit_type}` requires a {what} attachment")]
    MissingAttachment { unit_type: String, what: &'static str },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    InvalidConfig(Vec<String>),

    #[error("instance `{instance}` failed at t={time}: {source}")]
    UnitStep {
        instance: String,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{location}: {message}")]
    Parse { location: String, message: String },

    #[error("empty trace: {0}")]
    EmptyTrace(String),

    #[error("unsupported DSE algorithm `{0}` (only `exhaustive` is available)")]
    UnsupportedAlgorithm(String),

    #[error("incomplete result grid: {0}")]
    IncompleteGrid(String),

    #[error("sweep run failed for scenario `{scenario}` at {assignment}: {source}")]
    SweepRun {
        scenario: String,
        assignment: String,
        #[source]
        source: Box<Error>,
    },

    #[error("fault tree: {0}")]
    FaultTree(String),

    #[error("safety case: {0}")]
    Gsn(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Process exit code for this error: 3 for failures that happen while a
    /// simulation is running, 2 for everything detected up front.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnitStep { .. } | Error::SweepRun { .. } => 3,
            _ => 2,
        }
    }
}
