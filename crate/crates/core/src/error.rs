use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown element `{0}`")]
    UnknownElement(String),

    #[error("unknown material `{0}`")]
    UnknownMaterial(String),

    #[error("invalid formula `{formula}`: {reason}")]
    InvalidFormula { formula: String, reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("negative depth {0} nm")]
    NegativeDepth(f64),

    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("degenerate fit window: {0}")]
    DegenerateWindow(String),

    #[error("fit did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("no peak found: {0}")]
    NoPeak(String),

    #[error("only {resolved} of {expected} dips could be resolved")]
    UnresolvedDips { resolved: usize, expected: usize },

    #[error("rank-deficient design matrix (condition number {condition:.3e}): {context}")]
    RankDeficient { condition: f64, context: String },

    #[error("spectrum does not cover {0}")]
    Coverage(String),

    #[error("region outside profile range: {0}")]
    Region(String),

    #[error("division by zero: {0}")]
    ZeroDenominator(&'static str),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
