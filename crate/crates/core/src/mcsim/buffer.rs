//! Joint idleness of independent energy buffers.

use super::stats::{ProportionEstimate, WILSON_Z99};
use super::trial_rng;
use crate::energy::{BufferChain, EnergyProfile, BURN_IN_SLOTS};
use crate::{Error, Result};

/// Batches used for the interval of a correlated slot sequence.
const BATCHES: u64 = 50;

/// Frequency of slots in which none of the buffers transmits, one independent
/// chain per profile.
///
/// Consecutive slots are correlated, so the interval is a 99% batch-means
/// interval over 50 contiguous batches rather than a binomial one.
pub fn simulate_cluster_idle(profiles: &[EnergyProfile], slots: u64, seed: u64) -> Result<ProportionEstimate> {
    if profiles.is_empty() {
        return Err(Error::invalid("profiles", "need at least one buffer"));
    }
    if slots < BATCHES {
        return Err(Error::invalid("slots", format!("need at least {BATCHES} slots, got {slots}")));
    }
    let mut rngs: Vec<_> = (0..profiles.len() as u64).map(|i| trial_rng(seed, i)).collect();
    let mut chains = profiles.iter().map(|p| BufferChain::new(*p)).collect::<Result<Vec<_>>>()?;
    for (c, r) in chains.iter_mut().zip(&mut rngs) {
        c.burn_in(r, BURN_IN_SLOTS);
    }
    let mut batch_freq = Vec::with_capacity(BATCHES as usize);
    let mut total = 0u64;
    for b in 0..BATCHES {
        let len = slots / BATCHES + u64::from(b < slots % BATCHES);
        let mut idle = 0u64;
        for _ in 0..len {
            let mut any = false;
            for (c, r) in chains.iter_mut().zip(&mut rngs) {
                any |= c.step(r).1;
            }
            idle += u64::from(!any);
        }
        total += idle;
        batch_freq.push(idle as f64 / len as f64);
    }
    let n = BATCHES as f64;
    let value = total as f64 / slots as f64;
    let mean = batch_freq.iter().sum::<f64>() / n;
    let var = batch_freq.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let half = WILSON_Z99 * (var / n).sqrt();
    Ok(ProportionEstimate {
        value,
        ci_low: (value - half).max(0.0),
        ci_high: (value + half).min(1.0),
        trials: slots,
        seed,
    })
}
