use thiserror::Error;

/// Errors shared by every module in the crate.
///
/// Search routines tag budget failures with the pipeline stage that ran out,
/// so callers (and the CLI) can report where a solve gave up.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("parameter must be nonzero")]
    ZeroParameter,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("value outside representable range: {0}")]
    OverflowRange(String),

    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("budget exhausted in stage `{stage}`: {detail}")]
    BudgetExhausted { stage: &'static str, detail: String },

    #[error("target outside the reachable cone: {0}")]
    UnreachableCone(String),

    #[error("target coordinate is exactly zero: {0}")]
    ZeroTarget(String),

    #[error("vector not in the hypercyclic set: {0}")]
    NotInHCSet(String),

    #[error("enumeration too large: {0}")]
    EnumerationTooLarge(String),

    #[error("mismatched configuration: {0}")]
    MismatchedConfig(String),

    #[error("invalid family: {0}")]
    InvalidFamily(String),

    #[error("invalid input: {0}")]
    BadInput(String),
}

impl Error {
    /// Stable machine-readable code, used verbatim by the CLI JSON contract.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ZeroParameter => "zero_parameter",
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::OverflowRange(_) => "overflow_range",
            Error::PrecisionExhausted(_) => "precision_exhausted",
            Error::BudgetExhausted { .. } => "budget_exhausted",
            Error::UnreachableCone(_) => "unreachable_cone",
            Error::ZeroTarget(_) => "zero_target",
            Error::NotInHCSet(_) => "not_in_hc_set",
            Error::EnumerationTooLarge(_) => "enumeration_too_large",
            Error::MismatchedConfig(_) => "mismatched_config",
            Error::InvalidFamily(_) => "invalid_family",
            Error::BadInput(_) => "bad_input",
        }
    }

    /// Stage tag for budget errors, `None` otherwise.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::BudgetExhausted { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
