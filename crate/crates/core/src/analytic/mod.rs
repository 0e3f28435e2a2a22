//! Closed-form link, access and overall success probabilities.

mod access;
mod laplace;
mod link;
mod overall;
mod sk;

use serde::{Deserialize, Serialize};

use crate::geometry::InClusterAvailability;
use crate::{Error, Result};

pub use access::{cluster_access_approx, cluster_access_constants, cluster_access_series, CLUSTER_ACCESS_MAX_TERMS};
pub use laplace::{interference_laplace, kth_neighbor_cdf, kth_neighbor_pdf};
pub use link::{link_ccdf_prop1, link_ccdf_theorem1, link_ccdf_theorem2, separate_ties};
pub use overall::{asymptotic_outage, outage_floor_infinite_buffer, overall_success_at_beta, overall_success_theorem3};
pub use sk::{mixture_coefficients, partial_fraction_coeff, sk_ccdf, MAX_CLUSTER_SIZE};

/// An independent interfering tier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierConfig {
    pub intensity: f64,
    pub tx_prob: f64,
    /// Transmit power relative to the serving tier.
    pub power: f64,
}

impl TierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.intensity >= 0.0) || !self.intensity.is_finite() {
            return Err(Error::invalid("tier.intensity", format!("{} must be non-negative", self.intensity)));
        }
        if !(self.tx_prob > 0.0 && self.tx_prob <= 1.0) {
            return Err(Error::invalid("tier.tx_prob", format!("{} is not in (0, 1]", self.tx_prob)));
        }
        if !(self.power > 0.0) || !self.power.is_finite() {
            return Err(Error::invalid("tier.power", format!("{} must be positive", self.power)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    /// Intensity `λ` of the serving transmitter tier.
    pub tx_intensity: f64,
    /// Intensity `λ_u` of receivers.
    pub rx_intensity: f64,
    pub eta: f64,
    /// Noise power in linear units of the unit transmit power.
    pub noise: f64,
    /// Transmission probability of serving-tier nodes outside the cluster.
    pub out_cluster_tx_prob: f64,
    pub tiers: Vec<TierConfig>,
    pub in_cluster: InClusterAvailability,
}

impl NetworkModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.tx_intensity > 0.0) || !self.tx_intensity.is_finite() {
            return Err(Error::invalid("tx_intensity", format!("{} must be positive", self.tx_intensity)));
        }
        if !(self.rx_intensity > 0.0) || !self.rx_intensity.is_finite() {
            return Err(Error::invalid("rx_intensity", format!("{} must be positive", self.rx_intensity)));
        }
        if !(self.eta > 2.0) || !self.eta.is_finite() {
            return Err(Error::invalid("eta", format!("eta must exceed 2, got {}", self.eta)));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(Error::invalid("noise", format!("{} must be non-negative", self.noise)));
        }
        if !(0.0..=1.0).contains(&self.out_cluster_tx_prob) {
            return Err(Error::invalid(
                "out_cluster_tx_prob",
                format!("{} is not in [0, 1]", self.out_cluster_tx_prob),
            ));
        }
        for t in &self.tiers {
            t.validate()?;
        }
        Ok(())
    }

    /// `β = p_tr,o λ / λ_u`.
    pub fn density_ratio(&self) -> f64 {
        self.out_cluster_tx_prob * self.tx_intensity / self.rx_intensity
    }

    /// `Σ_m (p^(m)/p_tr)(λ_m/λ) P_m^{2/η}`, the extrinsic load seen by the averaged results.
    pub(crate) fn relative_tier_load(&self, p_tr: f64) -> f64 {
        let d = 2.0 / self.eta;
        self.tiers.iter().map(|t| t.tx_prob / p_tr * t.intensity / self.tx_intensity * t.power.powf(d)).sum()
    }
}

/// Success probability sampled on a threshold grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcdfCurve {
    pub thresholds: Vec<f64>,
    pub values: Vec<f64>,
}

impl CcdfCurve {
    pub fn evaluate<F>(thresholds: &[f64], mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<f64>,
    {
        let values = thresholds.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Ok(Self { thresholds: thresholds.to_vec(), values })
    }

    /// True when values lie in `[0, 1]` and do not increase along an increasing grid.
    pub fn is_valid_ccdf(&self, slack: f64) -> bool {
        let in_range = self.values.iter().all(|v| (-slack..=1.0 + slack).contains(v));
        let monotone =
            self.thresholds.windows(2).zip(self.values.windows(2)).all(|(t, v)| t[1] < t[0] || v[1] <= v[0] + slack);
        in_range && monotone
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn base_model() -> NetworkModel {
        NetworkModel {
            tx_intensity: 0.01,
            rx_intensity: 0.01,
            eta: 4.0,
            noise: 0.0,
            out_cluster_tx_prob: 0.5,
            tiers: vec![],
            in_cluster: InClusterAvailability::uniform(0.5, 1).unwrap(),
        }
    }

    #[test]
    fn validation() {
        let mut m = base_model();
        assert!(m.validate().is_ok());
        m.eta = 2.0;
        let err = m.validate().unwrap_err().to_string();
        assert!(err.contains("eta must exceed 2"), "{err}");
        let mut m = base_model();
        m.tiers.push(TierConfig { intensity: 0.1, tx_prob: 0.0, power: 1.0 });
        assert!(m.validate().is_err());
    }

    #[test]
    fn density_ratio_and_load() {
        let mut m = base_model();
        m.rx_intensity = 0.001;
        assert!((m.density_ratio() - 5.0).abs() < 1e-12);
        m.tiers.push(TierConfig { intensity: 0.02, tx_prob: 0.25, power: 4.0 });
        // (0.25/0.5)(0.02/0.01)·4^{1/2} = 2
        assert!((m.relative_tier_load(0.5) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn curve_checks() {
        let c = CcdfCurve::evaluate(&[0.0, 1.0, 2.0], |t| Ok(1.0 / (1.0 + t))).unwrap();
        assert!(c.is_valid_ccdf(0.0));
        let bad = CcdfCurve { thresholds: vec![0.0, 1.0], values: vec![0.3, 0.4] };
        assert!(!bad.is_valid_ccdf(1e-12));
    }
}
