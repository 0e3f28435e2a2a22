//! Interference Laplace functionals and the K-th neighbour distance law.

use std::f64::consts::PI;

use crate::specfun::{interference_constant, ln_gamma, pathloss_functional, reg_upper_inc_gamma};
use crate::{Error, Result};

/// `E[e^{−sI}]` for Rayleigh-faded interference from a PPP of effective
/// intensity `λ̂` and power `P` outside a guard disk of radius `g`.
pub fn interference_laplace(s: f64, intensity: f64, power: f64, guard: f64, eta: f64) -> Result<f64> {
    if !(eta > 2.0) {
        return Err(Error::domain("interference_laplace", format!("pathloss exponent {eta} must exceed 2")));
    }
    if !(s >= 0.0) || !(intensity >= 0.0) || !(power > 0.0) || !(guard >= 0.0) {
        return Err(Error::domain(
            "interference_laplace",
            format!("need s, intensity, guard >= 0 and power > 0 (s={s}, λ={intensity}, P={power}, g={guard})"),
        ));
    }
    if s == 0.0 || intensity == 0.0 {
        return Ok(1.0);
    }
    let exponent = if guard > 0.0 {
        PI * intensity * guard * guard * pathloss_functional(s * power / guard.powf(eta), eta)?
    } else {
        PI * intensity * interference_constant(eta)? * (power * s).powf(2.0 / eta)
    };
    Ok((-exponent).exp())
}

/// Density of the distance to the `k`-th nearest point of a PPP with intensity `λ'`.
pub fn kth_neighbor_pdf(r: f64, intensity: f64, k: u32) -> Result<f64> {
    check_neighbor_args(intensity, k)?;
    if !(r > 0.0) {
        return Err(Error::domain("kth_neighbor_pdf", format!("r = {r} must be positive")));
    }
    let a = intensity * PI * r * r;
    Ok((2.0_f64.ln() - r.ln() - ln_gamma(k as f64) + k as f64 * a.ln() - a).exp())
}

/// `Pr[d_k ≤ r] = 1 − Q(k, λ'πr²)`.
pub fn kth_neighbor_cdf(r: f64, intensity: f64, k: u32) -> Result<f64> {
    check_neighbor_args(intensity, k)?;
    if !(r >= 0.0) {
        return Err(Error::domain("kth_neighbor_cdf", format!("r = {r} must be non-negative")));
    }
    Ok(1.0 - reg_upper_inc_gamma(k, intensity * PI * r * r)?)
}

fn check_neighbor_args(intensity: f64, k: u32) -> Result<()> {
    if !(intensity > 0.0) {
        return Err(Error::domain("kth_neighbor", format!("intensity {intensity} must be positive")));
    }
    if k < 1 {
        return Err(Error::domain("kth_neighbor", "k must be at least 1"));
    }
    Ok(())
}
