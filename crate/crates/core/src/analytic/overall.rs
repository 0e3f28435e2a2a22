//! Joint access-and-decoding probability and the energy-limited outage floors.

use super::access::cluster_access_constants;
use super::link::averaged_ccdf;
use super::NetworkModel;
use crate::geometry::{ClusterGeometry, InClusterAvailability};
use crate::{Error, Result};

/// Overall success probability with `β = (1 − q_tr) λ / λ_u`.
pub fn overall_success_theorem3(
    model: &NetworkModel,
    geometry: &ClusterGeometry,
    q_tr: f64,
    theta: f64,
) -> Result<f64> {
    let beta = (1.0 - q_tr) * model.tx_intensity / model.rx_intensity;
    overall_success_at_beta(model, geometry, q_tr, beta, theta)
}

/// Overall success probability at an explicit density ratio.
pub fn overall_success_at_beta(
    model: &NetworkModel,
    geometry: &ClusterGeometry,
    q_tr: f64,
    beta: f64,
    theta: f64,
) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::invalid("beta", format!("{beta} must be positive")));
    }
    let extra = if beta.is_infinite() {
        0.0
    } else {
        let (c1, c2) = cluster_access_constants(geometry.k());
        c1 / (beta + c2)
    };
    averaged_ccdf(model, geometry, q_tr, theta, extra)
}

/// `G`, the outage probability as `θ → 0`.
pub fn asymptotic_outage(avail: &InClusterAvailability) -> f64 {
    avail.g()
}

/// Outage floor as the buffer grows without bound, for `ρ < p_ch`.
pub fn outage_floor_infinite_buffer(
    model: &NetworkModel,
    geometry: &ClusterGeometry,
    rho: f64,
    p_ch: f64,
    theta: f64,
) -> Result<f64> {
    if !(rho > 0.0 && rho < p_ch) {
        return Err(Error::domain(
            "outage_floor_infinite_buffer",
            format!("needs 0 < rho < p_ch, got rho = {rho}, p_ch = {p_ch}; use q_tr = 1 - p_ch when rho >= p_ch"),
        ));
    }
    Ok(1.0 - averaged_ccdf(model, geometry, 1.0 - rho, theta, 0.0)?)
}
