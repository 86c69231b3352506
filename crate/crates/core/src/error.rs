use thiserror::Error;

/// Errors raised by the optimizers and the differentiable problems.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("tensor `{id}`: {reason}")]
    Tensor { id: String, reason: String },

    #[error("non-finite value in `{id}` ({what}) at element {index}")]
    NonFinite {
        id: String,
        what: &'static str,
        index: usize,
    },

    #[error("optimizer state does not match parameters: {0}")]
    StateMismatch(String),

    #[error("internal logic error: {0}")]
    Internal(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("snapshot parse error at line {line}: {reason}")]
    Snapshot { line: usize, reason: String },

    #[error("dataset error: {0}")]
    Dataset(String),
}

pub type Result<T, E = OptimError> = std::result::Result<T, E>;

/// Returns the index of the first non-finite entry, if any.
pub(crate) fn first_non_finite(buf: &[f64]) -> Option<usize> {
    buf.iter().position(|x| !x.is_finite())
}

pub(crate) fn ensure_finite(buf: &[f64], id: &str, what: &'static str) -> Result<()> {
    match first_non_finite(buf) {
        Some(index) => Err(OptimError::NonFinite {
            id: id.to_string(),
            what,
            index,
        }),
        None => Ok(()),
    }
}
