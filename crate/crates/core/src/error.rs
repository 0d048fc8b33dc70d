use thiserror::Error;

/// Failures raised by the numerical evaluators.
///
/// Every variant names the operation that failed so callers (the CLI in
/// particular) can report it without extra context.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FptError {
    #[error("{op}: argument out of domain: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("{op}: series did not converge after {iterations} terms")]
    NonConvergence { op: &'static str, iterations: usize },

    #[error("{op}: tolerance not met (estimate {estimate:e}, error {error:e})")]
    ToleranceNotMet {
        op: &'static str,
        estimate: f64,
        error: f64,
    },

    #[error("{op}: series truncation tail {tail:e} exceeds tolerance at t = {t}")]
    Truncation { op: &'static str, t: f64, tail: f64 },

    #[error("{op}: degenerate denominator {value:e}")]
    DegenerateDenominator { op: &'static str, value: f64 },

    #[error("{op}: size {size} exceeds supported maximum {max}")]
    Size { op: &'static str, size: usize, max: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl FptError {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        FptError::Domain {
            op,
            detail: detail.into(),
        }
    }

    /// Name of the operation that raised the error, if any.
    pub fn operation(&self) -> Option<&'static str> {
        match self {
            FptError::Domain { op, .. }
            | FptError::NonConvergence { op, .. }
            | FptError::ToleranceNotMet { op, .. }
            | FptError::Truncation { op, .. }
            | FptError::DegenerateDenominator { op, .. }
            | FptError::Size { op, .. } => Some(op),
            FptError::Config(_) => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, FptError>;
