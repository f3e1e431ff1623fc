use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent shapes, invalid hyperparameters or malformed config input.
    #[error("configuration error: {0}")]
    Config(String),

    /// A loss, gradient or parameter became non-finite or exceeded the guard.
    #[error("divergence at step {step}: value {value}")]
    Divergence { value: f64, step: usize },

    /// The objective has zero gradient where a direction is required.
    #[error("degenerate start: {0}")]
    DegenerateStart(String),

    /// An argument outside the mathematical domain of an update rule.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A numerical invariant that should hold analytically was violated.
    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::Divergence { .. })
    }
}

/// Fails with a [`Error::Divergence`] when `value` is not finite.
pub(crate) fn ensure_finite(value: f64, step: usize) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Divergence { value, step })
    }
}

pub(crate) fn ensure_all_finite(values: &[f64], step: usize) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(&value) => Err(Error::Divergence { value, step }),
        None => Ok(()),
    }
}
