use thiserror::Error;

/// Errors produced by graph construction, schedule queries, and integration.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time {t} is outside the non-repeating schedule (total duration {total})")]
    OutOfHorizon { t: f64, total: f64 },

    #[error("integration blew up (non-finite state) at t = {t}")]
    IntegrationBlowup { t: f64 },

    #[error("time grids do not match: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
