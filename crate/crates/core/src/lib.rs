//! Simulation and numerical verification of two-way quantum key distribution.
//!
//! The crate covers the super-dense-coding (SDC) and LM05 two-way protocols:
//! qubit-level Monte Carlo state machines, the purification of Alice's
//! encoding into a POVM on half of a fixed pure state, the measurement
//! overlap and entropic uncertainty machinery, and asymptotic key rates under
//! independent and correlated depolarizing channels compared with BB84.

pub mod channels;
pub mod entropy;
pub mod error;
pub mod keyrates;
pub mod linalg;
pub mod measurement;
pub mod protocols;
pub mod purification;

pub use error::{QkdError, Result};
