//! Finite energy buffer driven by Bernoulli harvesting.
//!
//! A node holds up to `S` energy units. Each slot it observes its level, and if
//! at least `P` units are stored it transmits with probability `p_ch`, spending
//! `P` units. A unit is then harvested with probability `ρ`, capped at `S`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Slots discarded before a trajectory starts collecting statistics.
pub const BURN_IN_SLOTS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub rho: f64,
    pub buffer_size: u32,
    pub p_ch: f64,
    pub tx_power_units: u32,
}

impl EnergyProfile {
    /// Unit transmit power, the only case with a closed-form steady state.
    pub fn new(rho: f64, buffer_size: u32, p_ch: f64) -> Result<Self> {
        let p = Self { rho, buffer_size, p_ch, tx_power_units: 1 };
        p.validate()?;
        Ok(p)
    }

    /// Arbitrary transmit power; only the trajectory simulator accepts `P > 1`.
    pub fn with_tx_power(mut self, units: u32) -> Result<Self> {
        self.tx_power_units = units;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::invalid("rho", format!("{} is not in [0, 1]", self.rho)));
        }
        if !(self.p_ch > 0.0 && self.p_ch <= 1.0) {
            return Err(Error::invalid("p_ch", format!("{} is not in (0, 1]", self.p_ch)));
        }
        if self.buffer_size < 1 {
            return Err(Error::invalid("buffer_size", "must be at least 1"));
        }
        if self.tx_power_units < 1 || self.tx_power_units > self.buffer_size {
            return Err(Error::invalid(
                "tx_power_units",
                format!("{} must lie in 1..=buffer_size", self.tx_power_units),
            ));
        }
        Ok(())
    }

    /// Long-run probability that the buffer holds enough energy to transmit.
    pub fn steady_state_availability(&self) -> Result<f64> {
        self.validate()?;
        if self.tx_power_units != 1 {
            return Err(Error::domain(
                "steady_state_availability",
                format!("closed form needs unit transmit power, got {}", self.tx_power_units),
            ));
        }
        let (rho, p, s) = (self.rho, self.p_ch, self.buffer_size);
        if rho == 0.0 {
            return Ok(0.0);
        }
        if rho == 1.0 {
            return Ok(1.0);
        }
        if s == 1 {
            return Ok(rho / (rho + p - rho * p));
        }
        if rho == p {
            let s = s as f64;
            return Ok(s / (s + 1.0 - rho));
        }
        // π_1 = a π_0 and π_{k+1} = r π_k, so p_S = aΣ / (1 + aΣ) with Σ = Σ_{k<S} r^k.
        let ln_a = rho.ln() - p.ln() - (-rho).ln_1p();
        let ln_r = ln_a + (-p).ln_1p();
        let ln_sum = if ln_r == f64::NEG_INFINITY {
            0.0
        } else if ln_r.abs() < 1e-12 {
            (s as f64).ln()
        } else if ln_r > 0.0 {
            // Σ = (r^S - 1)/(r - 1); stay in log space for huge r^S
            let big = s as f64 * ln_r;
            big + (-(-big).exp_m1()).ln() - ln_r - (-(-ln_r).exp_m1()).ln()
        } else {
            ((s as f64 * ln_r).exp_m1() / ln_r.exp_m1()).ln()
        };
        let ln_as = ln_a + ln_sum;
        Ok(1.0 / (1.0 + (-ln_as).exp()))
    }

    /// `p_tr = p_ch · p_S`.
    pub fn transmission_probability(&self) -> Result<f64> {
        Ok(self.p_ch * self.steady_state_availability()?)
    }

    /// Transmission probability as the buffer grows without bound.
    pub fn infinite_buffer_limit(&self) -> f64 {
        self.rho.min(self.p_ch)
    }
}

/// Empirical counterpart of the steady-state quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BufferTrajectoryStats {
    pub slots: u64,
    pub availability_freq: f64,
    pub tx_freq: f64,
}

/// One node's buffer, advanced slot by slot.
#[derive(Debug, Clone)]
pub struct BufferChain {
    profile: EnergyProfile,
    level: u32,
}

impl BufferChain {
    pub fn new(profile: EnergyProfile) -> Result<Self> {
        profile.validate()?;
        Ok(Self { profile, level: 0 })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Advance one slot. Returns `(available, transmitted)`.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (bool, bool) {
        let p = &self.profile;
        let available = self.level >= p.tx_power_units;
        let transmitted = available && rng.random::<f64>() < p.p_ch;
        if transmitted {
            self.level -= p.tx_power_units;
        }
        if rng.random::<f64>() < p.rho && self.level < p.buffer_size {
            self.level += 1;
        }
        (available, transmitted)
    }

    pub fn burn_in<R: Rng + ?Sized>(&mut self, rng: &mut R, slots: u64) {
        for _ in 0..slots {
            self.step(rng);
        }
    }
}

/// Run one buffer from empty for `slots` slots after a fixed burn-in.
pub fn simulate_buffer(profile: &EnergyProfile, slots: u64, seed: u64) -> Result<BufferTrajectoryStats> {
    if slots == 0 {
        return Err(Error::invalid("slots", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chain = BufferChain::new(*profile)?;
    chain.burn_in(&mut rng, BURN_IN_SLOTS);
    let (mut avail, mut tx) = (0u64, 0u64);
    for _ in 0..slots {
        let (a, t) = chain.step(&mut rng);
        avail += a as u64;
        tx += t as u64;
    }
    Ok(BufferTrajectoryStats {
        slots,
        availability_freq: avail as f64 / slots as f64,
        tx_freq: tx as f64 / slots as f64,
    })
}
