use thiserror::Error;

#[derive(Debug, Error)]
pub enum AslipError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("leg length {length} m outside [{min}, {max}]")]
    LegLengthOutOfRange { length: f64, min: f64, max: f64 },

    /// Leg compressed to (or through) the pivot.
    #[error("singular leg configuration: r = {0}")]
    Singular(f64),

    #[error("guard not satisfied: {0}")]
    GuardNotSatisfied(String),

    #[error("no guard fired within {0} s")]
    Stall(f64),

    #[error("state became non-finite at t = {0}")]
    NonFinite(f64),

    #[error("walker failed at t = {t}: {reason}")]
    Fell { t: f64, reason: String },

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error(transparent)]
    Hlip(#[from] hlip::HlipError),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = AslipError> = std::result::Result<T, E>;
