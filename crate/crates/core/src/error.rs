//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A scalar argument was NaN or infinite.
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    /// A scalar argument violated a documented precondition.
    #[error("{name} = {value} violates precondition: {constraint}")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// A structural precondition failed (grid sizes, packet placement, ...).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Two objects that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A state that must be unit-norm is not.
    #[error("state is not normalized: |psi|^2 integrates to {norm}")]
    NotNormalized { norm: f64 },

    /// The transmission phase cannot be differentiated reliably.
    #[error("phase derivative ill-conditioned at E = {energy} eV: {reason}")]
    PhaseIllConditioned { energy: f64, reason: String },

    /// A dynamical run did not produce the quantity asked of it.
    #[error("run unsuitable: {0}")]
    UnsuitableRun(String),
}

/// Reject NaN/inf early so downstream math never sees them.
pub(crate) fn ensure_finite(name: &'static str, value: f64) -> crate::Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { name, value })
    }
}
