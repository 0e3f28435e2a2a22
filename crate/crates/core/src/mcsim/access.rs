//! Cluster access and joint access-and-decoding frequencies.
//!
//! A receiver is served by the cluster of its `K` nearest transmitters, and a
//! cluster serves one of the receivers that share it, chosen uniformly.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::field::{annulus_interference, pathloss_sq, ppp_in_disk, Point};
use super::stats::ProportionEstimate;
use super::{auto_window, run_blocks, ClusterSource, EmpiricalEstimate, SimConfig, Window};
use crate::analytic::NetworkModel;
use crate::geometry::ClusterGeometry;
use crate::{Error, Result};

/// `πλL²` for the margin `L` around the cluster disk outside which a
/// receiver sharing the cluster is never generated.
const MARGIN_MASS: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverallSuccessEstimate {
    /// Frequency of being served and decoding, per threshold.
    pub joint: EmpiricalEstimate,
    pub access: ProportionEstimate,
}

/// Interference settings for a joint trial.
struct LinkPart<'a> {
    model: &'a NetworkModel,
    active_prob: f64,
    window: Window,
}

struct ClusterDraw {
    selected: bool,
    dk2: f64,
    interference: f64,
}

/// One realization around a receiver at the origin. Returns `None` when a
/// fixed window does not reach past the cluster.
fn cluster_trial(
    rng: &mut ChaCha8Rng,
    k: usize,
    tx_intensity: f64,
    rx_intensity: f64,
    link: Option<&LinkPart<'_>>,
) -> Option<ClusterDraw> {
    let step = 1.0 / (PI * tx_intensity);
    let mut tx: Vec<(Point, f64)> = Vec::with_capacity(4 * k + 64);
    let mut r2 = 0.0;
    let push = |rng: &mut ChaCha8Rng, r2: f64, tx: &mut Vec<(Point, f64)>| {
        let r = r2.sqrt();
        let a = 2.0 * PI * rng.random::<f64>();
        tx.push((Point { x: r * a.cos(), y: r * a.sin() }, r));
    };
    for _ in 0..k {
        let e: f64 = Exp1.sample(rng);
        r2 += e * step;
        push(rng, r2, &mut tx);
    }
    let dk2 = r2;
    let dk = dk2.sqrt();
    let margin = (MARGIN_MASS / (PI * tx_intensity)).sqrt();
    let access_sq = (3.0 * dk + 2.0 * margin).powi(2);
    let link_sq = match link {
        None => 0.0,
        Some(l) => {
            let r = match l.window {
                Window::Auto => auto_window(dk, l.model.eta),
                Window::Fixed(r) => r,
            };
            if r * r <= dk2 {
                return None;
            }
            r * r
        }
    };
    let mut interference = 0.0;
    let outer = access_sq.max(link_sq);
    loop {
        let e: f64 = Exp1.sample(rng);
        r2 += e * step;
        if r2 > outer {
            break;
        }
        if r2 <= access_sq {
            push(rng, r2, &mut tx);
        }
        if let Some(l) = link {
            if r2 <= link_sq && (l.active_prob >= 1.0 || rng.random::<f64>() < l.active_prob) {
                let h: f64 = Exp1.sample(rng);
                interference += h * pathloss_sq(r2, l.model.eta);
            }
        }
    }
    if let Some(l) = link {
        for t in &l.model.tiers {
            interference += annulus_interference(rng, t.intensity * t.tx_prob, t.power, 0.0, link_sq, l.model.eta);
        }
    }

    let (cluster, others) = tx.split_at(k);
    let users = ppp_in_disk(rng, rx_intensity, dk + margin);
    let mut sharing = 1usize;
    for x in &users {
        let m = cluster.iter().map(|(s, _)| x.dist_sq(s)).fold(0.0, f64::max);
        let reach = m.sqrt();
        let xr = x.norm_sq().sqrt();
        // another transmitter strictly closer than the farthest member changes x's set
        let closer = others.iter().take_while(|(_, tr)| tr - xr <= reach).any(|(t, _)| x.dist_sq(t) < m);
        if !closer {
            sharing += 1;
        }
    }
    let selected = rng.random_range(0..sharing) == 0;
    Some(ClusterDraw { selected, dk2, interference })
}

fn cluster_intensity(model: &NetworkModel, p_tr: f64, source: ClusterSource) -> f64 {
    match source {
        ClusterSource::FullProcess => model.tx_intensity,
        ClusterSource::ThinnedProcess => p_tr * model.tx_intensity,
    }
}

/// Frequency with which the cluster of the typical receiver serves it.
///
/// Transmitters are active with probability `model.out_cluster_tx_prob`; the
/// cluster source selects whether clusters form over all or active transmitters.
pub fn simulate_cluster_access(model: &NetworkModel, k: usize, sim: &SimConfig) -> Result<ProportionEstimate> {
    model.validate()?;
    sim.validate()?;
    if k == 0 {
        return Err(Error::invalid("k", "cluster size must be at least 1"));
    }
    let lam_t = cluster_intensity(model, model.out_cluster_tx_prob, sim.cluster_source);
    if !(lam_t > 0.0) {
        return Err(Error::invalid("out_cluster_tx_prob", "no transmitter is ever active"));
    }
    let counts = run_blocks(
        sim.trials,
        1,
        sim.master_seed,
        |_| Ok(()),
        |_, rng, c| {
            let draw = cluster_trial(rng, k, lam_t, model.rx_intensity, None).expect("access trials always complete");
            c[0] += draw.selected as u64;
            Ok(())
        },
    )?;
    Ok(ProportionEstimate::from_count(counts[0], sim.trials, sim.master_seed))
}

/// Joint frequency of being served by the cluster and decoding, with members
/// at `ω_i d_K`, each idle with probability `q_tr`, and every other
/// transmitter active with probability `1 − q_tr`.
pub fn simulate_overall_success(
    model: &NetworkModel,
    omega: &ClusterGeometry,
    q_tr: f64,
    sim: &SimConfig,
) -> Result<OverallSuccessEstimate> {
    model.validate()?;
    sim.validate()?;
    if !(0.0..1.0).contains(&q_tr) {
        return Err(Error::invalid("q_tr", format!("{q_tr} is not in [0, 1)")));
    }
    if (omega.eta() - model.eta).abs() > 0.0 {
        return Err(Error::invalid("eta", format!("geometry uses {} but the model uses {}", omega.eta(), model.eta)));
    }
    let k = omega.k();
    let p_tr = 1.0 - q_tr;
    let lam_t = cluster_intensity(model, p_tr, sim.cluster_source);
    let link = LinkPart {
        model,
        active_prob: match sim.cluster_source {
            ClusterSource::FullProcess => p_tr,
            ClusterSource::ThinnedProcess => 1.0,
        },
        window: sim.window,
    };
    let w2: Vec<f64> = omega.omega().iter().map(|w| w * w).collect();
    let grid = &sim.theta_grid;
    let counts = run_blocks(
        sim.trials,
        grid.len() + 1,
        sim.master_seed,
        |_| Ok(()),
        |_, rng, c| {
            let draw = loop {
                if let Some(d) = cluster_trial(rng, k, lam_t, model.rx_intensity, Some(&link)) {
                    break d;
                }
            };
            let mut signal = 0.0;
            for w in &w2 {
                let active = rng.random::<f64>() >= q_tr;
                let h: f64 = Exp1.sample(rng);
                if active {
                    signal += h * pathloss_sq(w * draw.dk2, model.eta);
                }
            }
            let sinr = if signal == 0.0 { 0.0 } else { signal / (draw.interference + model.noise) };
            if draw.selected {
                c[grid.len()] += 1;
                for (n, &theta) in c.iter_mut().zip(grid) {
                    if sinr > theta {
                        *n += 1;
                    }
                }
            }
            Ok(())
        },
    )?;
    Ok(OverallSuccessEstimate {
        joint: EmpiricalEstimate::from_counts(sim, &counts[..grid.len()]),
        access: ProportionEstimate::from_count(counts[grid.len()], sim.trials, sim.master_seed),
    })
}
