use std::path::PathBuf;

/// Errors produced by the library.
///
/// Constructors and estimators validate their inputs eagerly; a returned
/// `Error` always names the offending parameter or precondition so callers
/// can surface it without extra context.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A law or generator specification string could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// Two inputs disagree on spatial dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A computation exceeded its resource budget (support cap, iteration cap).
    #[error("budget exceeded: {0}")]
    Budget(String),

    /// File I/O failed.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    /// A serialized artifact (pattern CSV / sidecar JSON) is malformed.
    #[error("malformed artifact {path}: {reason}")]
    Artifact { path: PathBuf, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
