use thiserror::Error;

/// Errors raised by the relation calculus.
///
/// Input-class errors (`DimensionMismatch`, `InvalidInput`, `NotNonnegative`,
/// `NotSelfadjoint`, `NotOperator`, `NotResolvent`, `InconsistentGram`,
/// `NotIsometric`, `Monotonicity`) describe arguments that violate an
/// operation's preconditions. `Verification` marks a failed internal
/// consistency check on a result the theory guarantees; seeing one is a bug.
#[derive(Debug, Clone, Error)]
pub enum RelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not nonnegative: eigenvalue {0:e}")]
    NotNonnegative(f64),

    #[error("not selfadjoint: {0}")]
    NotSelfadjoint(String),

    #[error("not an operator: multivalued part has dimension {0}")]
    NotOperator(usize),

    #[error("not a resolvent of a nonnegative selfadjoint relation: eigenvalue {0:e}")]
    NotResolvent(f64),

    #[error("semi-inner product not well-defined on the domain (residual {0:e})")]
    InconsistentGram(f64),

    #[error("not isometrically compatible (residual {0:e})")]
    NotIsometric(f64),

    #[error("monotonicity violated between n = {earlier} and n = {later}")]
    Monotonicity { earlier: u64, later: u64 },

    #[error("verification failed in {check}: {detail}")]
    Verification { check: String, detail: String },
}

impl RelError {
    pub(crate) fn verification(check: &str, detail: impl Into<String>) -> Self {
        RelError::Verification {
            check: check.to_string(),
            detail: detail.into(),
        }
    }

    /// True for errors caused by the caller's input rather than by a failed
    /// internal check.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, RelError::Verification { .. })
    }

    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            RelError::DimensionMismatch(_) => "dimension_mismatch",
            RelError::InvalidInput(_) => "invalid_input",
            RelError::NotNonnegative(_) => "not_nonnegative",
            RelError::NotSelfadjoint(_) => "not_selfadjoint",
            RelError::NotOperator(_) => "not_operator",
            RelError::NotResolvent(_) => "not_resolvent",
            RelError::InconsistentGram(_) => "inconsistent_gram",
            RelError::NotIsometric(_) => "not_isometric",
            RelError::Monotonicity { .. } => "monotonicity",
            RelError::Verification { .. } => "verification",
        }
    }
}

pub type Result<T> = std::result::Result<T, RelError>;
