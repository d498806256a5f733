use thiserror::Error;

use crate::expr::ExprError;

/// Errors produced by the library. The variants map onto the command-line
/// exit codes: validation-type failures exit with 1, numerical ones with 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("numerical failure: {message} (last residual {residual:e})")]
    Numerical { message: String, residual: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate point at ({re}, {im}): {reason}")]
    Degenerate { re: f64, im: f64, reason: String },

    #[error("domination violated on leaf {leaf}: S weight {s} exceeds T weight {t}")]
    DominationViolated { leaf: usize, s: String, t: String },

    #[error("no partition piece pairs positively with the form at step {step}")]
    ContradictionWitness { step: usize },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
