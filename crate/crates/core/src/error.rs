use thiserror::Error;

/// Errors raised by the kinematics, resolver, controller and simulator layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// The Jacobian (or singular spectrum) is identically zero, so no
    /// singularity threshold can be formed. A physical serial arm never
    /// produces this; it points at a broken model.
    #[error("degenerate Jacobian: all singular values are zero")]
    DegenerateJacobian,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),

    /// The requested twist bound cannot be met at the given sigma_max floor.
    #[error("infeasible threshold: required gamma {required:.6} exceeds 1")]
    InfeasibleGamma { required: f64 },

    #[error("trajectory log too short: {rows} rows, need at least {min}")]
    LogTooShort { rows: usize, min: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
