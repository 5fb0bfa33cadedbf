//! 1-D quantum scattering and wave-packet dynamics toolkit.
//!
//! The crate solves electron transmission through piecewise-constant
//! potential barriers three independent ways and cross-checks them:
//!
//! * [`barrier`]: closed-form transmission/reflection for a single
//!   rectangular barrier, both above and below the barrier top.
//! * [`transfer`]: a scattering-matrix solver for arbitrary
//!   piecewise-constant profiles (Redheffer composition, stable for
//!   opaque barriers).
//! * [`packet`]: time-domain Gaussian wave packets evolved with a
//!   Crank-Nicolson stepper, plus spectral-decomposition and
//!   classical-filter transmission models.
//!
//! [`uncertainty`] carries the Heisenberg/Robertson machinery (the
//! textbook estimation chain with its equality convention, exact
//! Robertson checks on discretized states, and a projective-measurement
//! ensemble demo), and [`timing`] the tunneling-time estimators (Wigner
//! phase time, dwell time, packet transit).
//!
//! Units throughout: energies in eV, lengths in nm, times in fs, masses
//! as ratios of the free electron mass. See [`units`] for constants and
//! conversions.

pub mod barrier;
pub mod error;
pub mod packet;
pub mod timing;
pub mod transfer;
pub mod uncertainty;
pub mod units;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
