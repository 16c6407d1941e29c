use thiserror::Error;

/// Errors raised by the evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in `{field}`: {reason}")]
    Domain { field: &'static str, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("accuracy not reached: achieved error bound {achieved:e} (requested {requested:e}) in {context}")]
    Accuracy {
        achieved: f64,
        requested: f64,
        context: String,
    },

    /// One or more validity inequalities of an asymptotic formula failed.
    #[error("outside validity window: {}", violated.join("; "))]
    Regime { violated: Vec<String> },

    /// Log divergence at coincident arguments.
    #[error("divergent at coincident arguments")]
    Divergent,

    #[error("consistency error: {0}")]
    Consistency(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("usage error: {0}")]
    Usage(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain {
        field,
        reason: reason.into(),
    }
}
