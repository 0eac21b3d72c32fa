use thiserror::Error;

use crate::stepping::RolloutLog;

#[derive(Debug, Error)]
pub enum HlipError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("negative duration {0} s")]
    NegativeDuration(f64),

    /// The formula diverges at this parameter value (coth/csch of zero).
    #[error("singular at single-support duration {t_ssp} s: {what}")]
    Singular { what: &'static str, t_ssp: f64 },

    #[error("non-finite {0}")]
    NonFinite(&'static str),

    /// A rollout produced a non-finite state. The log holds every step
    /// completed before the failure.
    #[error("rollout diverged at step {step}")]
    Diverged { step: usize, log: Box<RolloutLog> },

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = HlipError> = std::result::Result<T, E>;
