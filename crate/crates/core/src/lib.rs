//! Two harmonic oscillators coupled to a common bosonic bath: exact Gaussian
//! evolution, moment equations and closed-form asymptotic entanglement.

pub mod asymptotics;
pub mod bath;
pub mod config;
pub mod error;
pub mod exact;
pub mod gaussian;
pub mod moments;
pub mod special;
pub mod sweep;

pub use error::{Error, Result};
pub use gaussian::{CovarianceMatrix, ModeOrdering};

/// Version embedded in every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
