use thiserror::Error;

/// Errors raised by the horseshoe routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("observation vector is empty")]
    EmptyInput,

    #[error("the horseshoe prior density has a pole at theta = 0")]
    PoleAtZero,

    #[error("outside the domain of {what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("numerical accuracy failure in {what}: estimated relative error {rel_error:.3e}")]
    Accuracy { what: &'static str, rel_error: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("tau must be finite and positive, got {tau}")))
    }
}

pub(crate) fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite, got {x}")))
    }
}

/// Validates an observation vector: non-empty and all finite.
pub fn check_observations(y: &[f64]) -> Result<()> {
    if y.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some((i, v)) = y.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(invalid(format!("observation {i} is not finite ({v})")));
    }
    Ok(())
}
