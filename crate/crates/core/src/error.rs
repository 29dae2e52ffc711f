use thiserror::Error;

/// Errors raised by the kernel, ODE, simulation and estimation layers.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range. `name` is the
    /// configuration key of the offending value.
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("quadrature did not reach tolerance {tolerance:e} (estimated error {estimate:e})")]
    Quadrature { tolerance: f64, estimate: f64 },

    #[error("frequency cutoff too small: truncation bound {bound:e} exceeds tolerance {tolerance:e}")]
    Truncation { bound: f64, tolerance: f64 },

    #[error("density evaluated to {value:e}, more negative than the quadrature tolerance")]
    NegativeDensity { value: f64 },

    #[error("product inequality requires p(t,0) <= 1, got p({t},0) = {peak}")]
    PeakAboveOne { t: f64, peak: f64 },

    #[error("grid mismatch: expected {expected} samples, got {actual}")]
    GridMismatch { expected: usize, actual: usize },

    #[error("censored data: {0}")]
    Censored(String),

    #[error("step size underflow at t = {t} (y = {y:e})")]
    StepUnderflow { t: f64, y: f64 },

    #[error("malformed csv: {0}")]
    Format(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name: name.to_string(),
        reason: reason.into(),
    }
}
