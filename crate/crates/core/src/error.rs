use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// The integrator stopped early. `last_state` is the last accepted state vector.
    #[error("integration failed at t = {t}: {reason}")]
    Integration {
        reason: String,
        t: f64,
        last_state: Vec<f64>,
    },

    #[error("no reduced period found before t_max = {t_max}")]
    PeriodNotFound { t_max: f64 },

    #[error("reduced orbit does not close: residual {residual:e} at t = {t}")]
    NotPeriodic { t: f64, residual: f64 },

    #[error("phase inconsistency: residual {residual:e} exceeds {tol:e}")]
    PhaseInconsistency { residual: f64, tol: f64 },

    #[error("oracle unavailable: {0}")]
    OracleUnavailable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
