//! Probability that a typical receiver wins its cluster's service draw.

use crate::specfun::ln_gamma;
use crate::{Error, Result};

pub const CLUSTER_ACCESS_MAX_TERMS: usize = 500;
const SERIES_TERM_TOL: f64 = 1e-12;
const CELL_SHAPE: f64 = 3.5;

/// Non-cooperative access probability from the Gamma approximation of the
/// Poisson–Voronoi cell area: `Σ_i Pr[i − 1 other users in the cell] / i`.
pub fn cluster_access_series(beta: f64, terms: usize) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::invalid("beta", format!("{beta} must be positive")));
    }
    if terms == 0 {
        return Err(Error::invalid("terms", "need at least one term"));
    }
    if beta.is_infinite() {
        return Ok(1.0);
    }
    let a = CELL_SHAPE;
    let inv = 1.0 / beta;
    let log_base = (a + inv).ln();
    let lead = a * a.ln() - ln_gamma(a);
    let mut total = 0.0;
    let mut prev = f64::NEG_INFINITY;
    for i in 1..=terms.min(CLUSTER_ACCESS_MAX_TERMS) {
        let fi = i as f64;
        let log_term = lead - ln_gamma(fi + 1.0) + ln_gamma(fi + a) + (fi - 1.0) * inv.ln() - (fi + a) * log_base;
        let term = log_term.exp();
        total += term;
        if term < SERIES_TERM_TOL && log_term < prev {
            break;
        }
        prev = log_term;
    }
    Ok(total.min(1.0))
}

/// Fitted constants `(C_1(K), C_2(K))`.
pub fn cluster_access_constants(k: usize) -> (f64, f64) {
    if k <= 1 {
        (0.725, 0.0)
    } else {
        let k = k as f64;
        (0.06 * k + 0.78, 0.34 * k - 0.49)
    }
}

/// `[1 + C_1(K)/(β + C_2(K))]^{−K}`.
pub fn cluster_access_approx(k: usize, beta: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k", "cluster size must be at least 1"));
    }
    if !(beta > 0.0) {
        return Err(Error::invalid("beta", format!("{beta} must be positive")));
    }
    if beta.is_infinite() {
        return Ok(1.0);
    }
    let (c1, c2) = cluster_access_constants(k);
    Ok((1.0 + c1 / (beta + c2)).powi(-(k as i32)))
}
