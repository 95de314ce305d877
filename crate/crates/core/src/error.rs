use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("walk exceeded the hard cap of {0} steps")]
    StepCap(u64),

    #[error(
        "fixed point did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error(
        "outside small-excess regime: target {target}, largest achieved constraint {achieved}"
    )]
    OutsideSmallExcess { target: f64, achieved: f64 },

    #[error("mesh resolution too coarse: relative dual-energy gap {0:.3e}")]
    MeshResolution(f64),

    #[error("fit unavailable: {0}")]
    FitUnavailable(String),

    #[error("window radius {window} too small: required probe radius {required:.3}")]
    WindowTooSmall { window: u32, required: f64 },

    #[error("monotonicity violated: {0}")]
    NonMonotone(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
