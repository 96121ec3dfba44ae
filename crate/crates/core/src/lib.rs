//! Robust timing-based localization under contaminated measurements.
//!
//! The crate is `no_std` with `alloc`. It covers the measurement model for
//! TOA, TDOA and TDST ([`model`]), a mixture data simulator ([`sim`]), the
//! estimators ([`solver`]) and evaluation metrics ([`metrics`]).
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod metrics;
pub mod model;
pub mod scenario;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use model::{Network, Sequence, Technique, Theta};
