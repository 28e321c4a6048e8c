use thiserror::Error;

/// Errors produced by simulation and analysis routines.
///
/// Sampling itself never fails; errors arise from parameter validation,
/// from numerical routines that are driven outside their domain, and from
/// I/O in the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("root finder did not converge: {0}")]
    RootFinder(String),

    #[error("ODE step size underflow at t = {t:.6e}; field is stiff or invalid")]
    StepSizeUnderflow { t: f64 },

    #[error("coupled triple chain supports at most {cap} founders per coordinate, got {got}")]
    TripleCapExceeded { cap: u64, got: u64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
