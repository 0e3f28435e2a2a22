//! Analytical model of a large cooperative wireless network whose transmitters
//! run on harvested energy, together with a stochastic-geometry Monte Carlo
//! simulator that checks every closed form.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: Gamma, incomplete Gamma, Gauss hypergeometric and the
//!   pathloss interference functional.
//! * [`energy`]: the energy-buffer Markov chain and its stationary law.
//! * [`geometry`]: cluster distances, multiplicities and elementary-symmetric
//!   coefficients.
//! * [`analytic`]: link success, cluster access and overall success
//!   probabilities.
//! * [`mcsim`]: Poisson field generation and empirical estimators.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analytic;
pub mod energy;
mod error;
pub mod geometry;
pub mod mcsim;
pub mod specfun;

pub use analytic::{CcdfCurve, NetworkModel, TierConfig};
pub use energy::{BufferTrajectoryStats, EnergyProfile};
pub use error::{Error, Result};
pub use geometry::{ClusterGeometry, InClusterAvailability, Multiplicities};
pub use mcsim::{ClusterSource, EmpiricalEstimate, SimConfig, Window};

/// Converts a noise power in dBm to linear watts (unit transmit power is 1 W).
pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a threshold in dB to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
