use thiserror::Error;

/// Errors raised by model evaluation, integration and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error in {model}: {reason}")]
    Domain { model: &'static str, reason: String },

    #[error("non-finite value in {component}")]
    NonFinite { component: &'static str },

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("step {step} failed (last valid index {last_valid}): {source}")]
    StepFailed {
        step: usize,
        last_valid: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("trajectory escaped at step {step}: |state|_inf = {norm:e} exceeds {bound:e}")]
    Escaped { step: usize, norm: f64, bound: f64 },

    #[error("reference did not converge: endpoint change {change:e} after {refinements} refinements")]
    ReferenceDidNotConverge { change: f64, refinements: usize },

    #[error("phase undefined near origin at sample {index}")]
    PhaseUndefined { index: usize },

    #[error("no admissible initial conditions on shell {shell}")]
    NoAdmissibleInitialConditions { shell: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True when the failure comes from the trajectory leaving the admissible
    /// region (escape, non-finite values, model domain violation).
    pub fn is_numeric_abort(&self) -> bool {
        match self {
            Error::Escaped { .. } | Error::NonFinite { .. } | Error::Domain { .. } => true,
            Error::ReferenceDidNotConverge { .. } => true,
            Error::Stage { source, .. } | Error::StepFailed { source, .. } => {
                source.is_numeric_abort()
            }
            _ => false,
        }
    }
}
