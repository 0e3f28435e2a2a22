//! Monte Carlo validation engine.
//!
//! Every trial draws its randomness from its own ChaCha stream derived from
//! the master seed and the trial index, and trials are aggregated with integer
//! counts, so results are bit-identical under any thread schedule.

mod access;
mod buffer;
mod field;
mod link;
mod stats;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use access::{simulate_cluster_access, simulate_overall_success, OverallSuccessEstimate};
pub use buffer::simulate_cluster_idle;
pub use field::{empirical_laplace, sample_kth_nearest, sample_ppp, Point};
pub use link::{simulate_link_ccdf, LinkScenario};
pub use stats::{kolmogorov_pvalue, ks_statistic, wilson_interval, MeanEstimate, ProportionEstimate, WILSON_Z99};

/// Trials sharing one buffer-chain block in trajectory mode.
pub const TRAJECTORY_BLOCK: u64 = 512;
/// Ratio `(R/g)^{η−2}` of in-window to truncated mean interference.
const WINDOW_INTERFERENCE_RATIO: f64 = 1001.0;
/// Cap on the expected number of points generated per trial.
pub const MAX_POINTS_PER_TRIAL: f64 = 4.0e5;

/// How a transmitter cluster is formed relative to energy-driven activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterSource {
    /// The `K` nearest points of the whole transmitter process.
    #[serde(alias = "full")]
    FullProcess,
    /// The `K` nearest points of the process thinned to its active density.
    #[serde(alias = "thinned")]
    ThinnedProcess,
}

/// Simulation disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Scale the disk with the guard radius so truncated interference stays
    /// below one thousandth of the in-window mean.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: u64,
    pub window: Window,
    pub theta_grid: Vec<f64>,
    pub master_seed: u64,
    pub cluster_source: ClusterSource,
    /// Draw activity from the stationary Bernoulli law instead of running
    /// per-node buffer chains.
    pub steady_state_indicators: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            window: Window::Auto,
            theta_grid: vec![],
            master_seed: 0,
            cluster_source: ClusterSource::ThinnedProcess,
            steady_state_indicators: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if let Window::Fixed(r) = self.window {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::invalid("window_radius", format!("{r} must be positive")));
            }
        }
        if let Some(t) = self.theta_grid.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
            return Err(Error::invalid("theta_grid", format!("{t} must be finite and non-negative")));
        }
        Ok(())
    }
}

/// Success frequencies on a threshold grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEstimate {
    pub theta_grid: Vec<f64>,
    pub success_freq: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    /// Per-member transmit frequency when buffer chains drive activity.
    pub in_cluster_tx_freq: Option<Vec<f64>>,
}

impl EmpiricalEstimate {
    pub(crate) fn from_counts(sim: &SimConfig, counts: &[u64]) -> Self {
        let mut est = Self {
            theta_grid: sim.theta_grid.clone(),
            success_freq: Vec::with_capacity(counts.len()),
            ci_low: Vec::with_capacity(counts.len()),
            ci_high: Vec::with_capacity(counts.len()),
            trials: sim.trials,
            seed: sim.master_seed,
            in_cluster_tx_freq: None,
        };
        for &c in counts {
            let (lo, hi) = wilson_interval(c, sim.trials, WILSON_Z99);
            est.success_freq.push(c as f64 / sim.trials as f64);
            est.ci_low.push(lo);
            est.ci_high.push(hi);
        }
        est
    }

    /// Half-width of the widest interval on the grid.
    pub fn max_half_width(&self) -> f64 {
        self.ci_low.iter().zip(&self.ci_high).map(|(l, h)| 0.5 * (h - l)).fold(0.0, f64::max)
    }
}

/// Per-trial generator: the master stream with the trial index as stream id.
pub(crate) fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Per-block generator for state carried across trials, on streams disjoint
/// from every trial stream.
pub(crate) fn block_rng(master_seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream((1u64 << 63) | block);
    rng
}

/// Run `trials` trials in blocks and return one accumulator per block, in
/// block order.
///
/// `init` builds the state of one block from the block generator; `step` runs
/// one trial against that state with the trial's own generator.
pub(crate) fn map_blocks<S, T, I, N, F>(trials: u64, master_seed: u64, init: I, new_acc: N, step: F) -> Result<Vec<T>>
where
    T: Send,
    I: Fn(&mut ChaCha8Rng) -> Result<S> + Sync,
    N: Fn() -> T + Sync,
    F: Fn(&mut S, &mut ChaCha8Rng, &mut T) -> Result<()> + Sync,
{
    let blocks = trials.div_ceil(TRAJECTORY_BLOCK);
    let base = ChaCha8Rng::seed_from_u64(master_seed);
    (0..blocks)
        .into_par_iter()
        .map(|b| -> Result<T> {
            let mut acc = new_acc();
            let mut brng = block_rng(master_seed, b);
            let mut state = init(&mut brng)?;
            let lo = b * TRAJECTORY_BLOCK;
            let hi = (lo + TRAJECTORY_BLOCK).min(trials);
            for t in lo..hi {
                let mut rng = base.clone();
                rng.set_stream(t);
                step(&mut state, &mut rng, &mut acc)?;
            }
            Ok(acc)
        })
        .collect()
}

/// [`map_blocks`] summing `bins` integer counters.
pub(crate) fn run_blocks<S, I, F>(trials: u64, bins: usize, master_seed: u64, init: I, step: F) -> Result<Vec<u64>>
where
    I: Fn(&mut ChaCha8Rng) -> Result<S> + Sync,
    F: Fn(&mut S, &mut ChaCha8Rng, &mut [u64]) -> Result<()> + Sync,
{
    let parts = map_blocks(trials, master_seed, init, || vec![0u64; bins], |s, r, c: &mut Vec<u64>| step(s, r, c))?;
    let mut total = vec![0u64; bins];
    for p in parts {
        total.iter_mut().zip(&p).for_each(|(x, y)| *x += y);
    }
    Ok(total)
}

/// Guard-scaled window radius for interference with a guard disk of radius `guard`.
pub(crate) fn auto_window(guard: f64, eta: f64) -> f64 {
    guard * WINDOW_INTERFERENCE_RATIO.powf(1.0 / (eta - 2.0)).max(5.0)
}

/// Shrink `radius` if a disk of that size would hold too many points.
pub(crate) fn cap_window(radius: f64, total_intensity: f64) -> f64 {
    let expected = total_intensity * std::f64::consts::PI * radius * radius;
    if expected > MAX_POINTS_PER_TRIAL {
        let capped = (MAX_POINTS_PER_TRIAL / (total_intensity * std::f64::consts::PI)).sqrt();
        log::warn!("window radius {radius:.1} would hold {expected:.0} points per trial; capping at {capped:.1}");
        capped
    } else {
        radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_window_rule() {
        // η = 4: (R/g)² ≥ 1001
        let r = auto_window(10.0, 4.0);
        assert!((r / 10.0).powi(2) >= 1001.0 - 1e-9);
        assert_eq!(auto_window(1.0, 40.0), 5.0);
    }

    #[test]
    fn blocks_cover_all_trials() {
        let c = run_blocks(
            1300,
            1,
            7,
            |_| Ok(()),
            |_, _, c| {
                c[0] += 1;
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(c, vec![1300]);
    }

    #[test]
    fn streams_are_distinct() {
        use rand::Rng;
        let a: u64 = trial_rng(1, 0).random();
        let b: u64 = trial_rng(1, 1).random();
        let c: u64 = block_rng(1, 0).random();
        assert!(a != b && a != c && b != c);
    }

    #[test]
    fn config_validation() {
        let mut s = SimConfig { theta_grid: vec![0.1, 1.0], ..SimConfig::default() };
        assert!(s.validate().is_ok());
        s.window = Window::Fixed(-1.0);
        assert!(s.validate().is_err());
        s.window = Window::Auto;
        s.trials = 0;
        assert!(s.validate().is_err());
    }
}

#[cfg(test)]
mod sim_tests;
