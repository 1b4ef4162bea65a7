use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QflowError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("trajectory escaped above the ceiling at t = {t}")]
    EscapedAbove { t: f64 },
    #[error("trajectory escaped below zero at t = {t}")]
    EscapedBelow { t: f64 },
    #[error("shooting bracket does not separate: {0}")]
    ShootingBracket(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("no complete period in trajectory")]
    PeriodNotFound,
    #[error("resonant exponent {0}: logarithmic solutions are not supported")]
    Resonance(f64),
    #[error("linear solve failed: {0}")]
    Solve(String),
    #[error("ill-conditioned reduction: {0}")]
    IllConditioned(String),
}

pub type Result<T> = std::result::Result<T, QflowError>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(QflowError::Domain(msg.into()))
}
