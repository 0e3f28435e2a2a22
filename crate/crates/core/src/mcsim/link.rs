//! Link success frequencies from simulated networks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::field::{annulus_interference, pathloss_sq};
use super::{auto_window, cap_window, run_blocks, ClusterSource, EmpiricalEstimate, SimConfig, Window};
use crate::analytic::NetworkModel;
use crate::energy::{BufferChain, BURN_IN_SLOTS};
use crate::geometry::ClusterGeometry;
use crate::{Error, Result};

/// Which cluster placement is simulated.
#[derive(Debug, Clone, PartialEq)]
pub enum LinkScenario {
    /// Members at fixed distances, other serving-tier transmitters outside
    /// the disk through the farthest member.
    Conditioned(ClusterGeometry),
    /// Members at `ω_i d_K` where `d_K` is the distance to the `K`-th nearest
    /// transmitter of a fresh realization, each idle with probability `q_tr`.
    Averaged { omega: ClusterGeometry, q_tr: f64 },
}

impl LinkScenario {
    fn geometry(&self) -> &ClusterGeometry {
        match self {
            Self::Conditioned(g) => g,
            Self::Averaged { omega, .. } => omega,
        }
    }
}

/// Per-block state when buffer chains drive in-cluster activity.
struct Chains {
    nodes: Vec<BufferChain>,
    rng: ChaCha8Rng,
}

/// Empirical `Pr[SINR > θ]` on `sim.theta_grid`.
pub fn simulate_link_ccdf(model: &NetworkModel, scenario: &LinkScenario, sim: &SimConfig) -> Result<EmpiricalEstimate> {
    model.validate()?;
    sim.validate()?;
    let geometry = scenario.geometry();
    let k = geometry.k();
    if (geometry.eta() - model.eta).abs() > 0.0 {
        return Err(Error::invalid(
            "eta",
            format!("geometry uses {} but the model uses {}", geometry.eta(), model.eta),
        ));
    }
    let idle: Vec<f64> = match scenario {
        LinkScenario::Conditioned(_) => {
            if model.in_cluster.k() != k {
                return Err(Error::invalid(
                    "q_tr",
                    format!("{} idle probabilities for a cluster of {k}", model.in_cluster.k()),
                ));
            }
            model.in_cluster.q().to_vec()
        }
        LinkScenario::Averaged { q_tr, .. } => {
            if !(0.0..1.0).contains(q_tr) {
                return Err(Error::invalid("q_tr", format!("{q_tr} is not in [0, 1)")));
            }
            vec![*q_tr; k]
        }
    };
    let profiles = if sim.steady_state_indicators {
        None
    } else {
        let p = model
            .in_cluster
            .profiles()
            .ok_or_else(|| Error::invalid("in_cluster", "buffer trajectories need an energy profile per member"))?;
        if p.len() != k {
            return Err(Error::invalid("in_cluster", format!("{} profiles for a cluster of {k}", p.len())));
        }
        Some(p.to_vec())
    };

    let eta = model.eta;
    let tier_load: f64 = model.tiers.iter().map(|t| t.intensity * t.tx_prob).sum();
    let grid = &sim.theta_grid;
    let bins = grid.len() + k;

    // (intensity of the points forming the cluster, intensity of active serving-tier interferers)
    let (cluster_intensity, out_intensity) = match scenario {
        LinkScenario::Conditioned(_) => (0.0, model.out_cluster_tx_prob * model.tx_intensity),
        LinkScenario::Averaged { q_tr, .. } => {
            let p = 1.0 - q_tr;
            let c = match sim.cluster_source {
                ClusterSource::FullProcess => model.tx_intensity,
                ClusterSource::ThinnedProcess => p * model.tx_intensity,
            };
            (c, p * model.tx_intensity)
        }
    };
    let conditioned_window = match (scenario, sim.window) {
        (LinkScenario::Conditioned(g), Window::Auto) => {
            Some(cap_window(auto_window(g.d_k(), eta), out_intensity + tier_load))
        }
        (LinkScenario::Conditioned(g), Window::Fixed(r)) => {
            if r <= g.d_k() {
                return Err(Error::invalid("window_radius", format!("{r} must exceed d_K = {}", g.d_k())));
            }
            Some(r)
        }
        _ => None,
    };

    let init = |brng: &mut ChaCha8Rng| -> Result<Option<Chains>> {
        let Some(profiles) = &profiles else { return Ok(None) };
        let mut nodes = profiles.iter().map(|p| BufferChain::new(*p)).collect::<Result<Vec<_>>>()?;
        for n in &mut nodes {
            n.burn_in(brng, BURN_IN_SLOTS);
        }
        Ok(Some(Chains { nodes, rng: brng.clone() }))
    };

    let step = |state: &mut Option<Chains>, rng: &mut ChaCha8Rng, counts: &mut [u64]| -> Result<()> {
        let (d2, outer_sq): (Vec<f64>, f64) = match scenario {
            LinkScenario::Conditioned(g) => {
                let r = conditioned_window.unwrap_or(f64::INFINITY);
                (g.distances().iter().map(|d| d * d).collect(), r * r)
            }
            LinkScenario::Averaged { omega, .. } => loop {
                let mut dk2 = 0.0;
                for _ in 0..k {
                    let e: f64 = Exp1.sample(rng);
                    dk2 += e / (std::f64::consts::PI * cluster_intensity);
                }
                let r = match sim.window {
                    Window::Auto => auto_window(dk2.sqrt(), eta),
                    Window::Fixed(r) => r,
                };
                if r * r > dk2 {
                    break (omega.omega().iter().map(|w| w * w * dk2).collect(), r * r);
                }
            },
        };
        let dk2 = d2[k - 1];

        let mut signal = 0.0;
        for i in 0..k {
            let active = match state {
                Some(ch) => {
                    let (_, tx) = ch.nodes[i].step(&mut ch.rng);
                    tx
                }
                None => rng.random::<f64>() >= idle[i],
            };
            let h: f64 = Exp1.sample(rng);
            if active {
                counts[grid.len() + i] += 1;
                signal += h * pathloss_sq(d2[i], eta);
            }
        }
        let mut interference = annulus_interference(rng, out_intensity, 1.0, dk2, outer_sq, eta);
        for t in &model.tiers {
            interference += annulus_interference(rng, t.intensity * t.tx_prob, t.power, 0.0, outer_sq, eta);
        }
        let sinr = if signal == 0.0 { 0.0 } else { signal / (interference + model.noise) };
        for (c, &theta) in counts.iter_mut().zip(grid) {
            if sinr > theta {
                *c += 1;
            }
        }
        Ok(())
    };

    let counts = run_blocks(sim.trials, bins, sim.master_seed, init, step)?;
    let mut est = EmpiricalEstimate::from_counts(sim, &counts[..grid.len()]);
    if profiles.is_some() {
        est.in_cluster_tx_freq = Some(counts[grid.len()..].iter().map(|&c| c as f64 / sim.trials as f64).collect());
    }
    Ok(est)
}
