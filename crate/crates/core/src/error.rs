use thiserror::Error;

/// Errors raised anywhere in the library. [`Error::class`] groups them for
/// process exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular (zero pivot in column {pivot})")]
    Singular { pivot: usize },

    #[error("did not converge: {0}")]
    NoConvergence(String),

    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("game violates structural assumptions: {0}")]
    InvalidGame(String),

    #[error("event at t={t} does not follow the previous event at t={last}")]
    EventOrder { t: f64, last: f64 },

    #[error("state diverged at step {step} (t={t}): {detail}")]
    Divergence { step: usize, t: f64, detail: String },

    #[error("Lyapunov design failed: {0}")]
    Design(String),

    #[error("trace too short: {0}")]
    TraceTooShort(String),

    #[error("trace grids do not match: {0}")]
    GridMismatch(String),

    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

/// Coarse error classes; each maps to one nonzero process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Validation,
    Simulation,
    Analysis,
    Io,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Validation => 3,
            ErrorClass::Simulation => 4,
            ErrorClass::Analysis => 5,
            ErrorClass::Io => 6,
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. } | Error::UnknownPreset(_) => ErrorClass::Config,
            Error::Dimension(_) | Error::InvalidConfig { .. } | Error::InvalidGame(_) => ErrorClass::Validation,
            Error::Divergence { .. } | Error::EventOrder { .. } | Error::GridMismatch(_) => ErrorClass::Simulation,
            Error::Singular { .. } | Error::NoConvergence(_) | Error::Design(_) | Error::TraceTooShort(_) => {
                ErrorClass::Analysis
            }
            Error::Io { .. } | Error::Csv(_) => ErrorClass::Io,
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig { field: field.into(), reason: reason.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
