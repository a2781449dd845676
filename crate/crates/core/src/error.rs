use thiserror::Error;

/// Errors raised by the library.
///
/// Variants split into two classes: contract violations (bad input, failed
/// precondition) and numeric or capacity failures. The CLI maps the first
/// class to exit status 2 and the second to exit status 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeylError {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("inadmissible prime {p} for {family}: {constraint}")]
    Inadmissible {
        family: String,
        p: u64,
        constraint: String,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("search cap exceeded: {0}")]
    SearchCap(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("hypothesis violated at M = {m}: |S(M)| = {measured:.6} exceeds {bound:.6}")]
    Hypothesis { m: u64, measured: f64, bound: f64 },
}

impl WeylError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        WeylError::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by the caller's input rather than by numerics
    /// or resource limits.
    pub fn is_contract_violation(&self) -> bool {
        matches!(
            self,
            WeylError::InvalidArgument { .. }
                | WeylError::Precondition(_)
                | WeylError::Inadmissible { .. }
                | WeylError::Parse(_)
                | WeylError::Hypothesis { .. }
        )
    }
}

pub type Result<T, E = WeylError> = std::result::Result<T, E>;
