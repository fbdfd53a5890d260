use thiserror::Error;

use crate::evolution::FixedPointReport;

pub type Result<T, E = CglError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CglError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("shape mismatch: expected {expected} values, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("fields live on different domains")]
    DomainMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("exponent q = {q} is not Sobolev subcritical in dimension {dim} (2* = {critical})")]
    SupercriticalExponent { q: f64, dim: usize, critical: f64 },

    #[error("scalar resolvent did not converge for |u| = {magnitude}")]
    ResolventNonConvergence { magnitude: f64 },

    #[error("non-finite state at step {step} (t = {time})")]
    Blowup { step: usize, time: f64 },

    #[error("time step {dt} exceeds the stability bound {bound} of the explicit Yosida term")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("Picard iteration did not converge after {} iterations", report.iterations)]
    NonContractive { report: Box<FixedPointReport> },

    #[error("iterate {iteration} left the ball: norm {norm} > radius {radius}")]
    BallEscape {
        iteration: usize,
        norm: f64,
        radius: f64,
        report: Box<FixedPointReport>,
    },

    #[error("small-data certificate not applicable: {0}")]
    NotApplicable(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configurations do not match: {0}")]
    ConfigMismatch(String),
}

impl CglError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        CglError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
