//! Special functions used by the analytical model.
//!
//! Everything here is a pure `f64 -> f64` kernel with no allocation. Only the
//! parameter families the model actually needs are supported: integer-order
//! incomplete Gamma, and ₂F₁ with first parameter fixed to one on the
//! non-positive real axis.

use std::f64::consts::PI;

use crate::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Relative size at which a hypergeometric series is considered converged.
const SERIES_EPS: f64 = 1e-16;
const SERIES_MAX_TERMS: usize = 20_000;

fn lanczos_sum(x: f64) -> f64 {
    // x here is the shifted argument (original x - 1).
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    acc
}

/// Gamma function on the whole real line except the poles, via Lanczos with
/// reflection below one half.
pub(crate) fn gamma_real(x: f64) -> f64 {
    if x < 0.5 {
        let s = (PI * x).sin();
        if s == 0.0 {
            return f64::NAN;
        }
        PI / (s * gamma_real(1.0 - x))
    } else {
        let xm = x - 1.0;
        let t = xm + LANCZOS_G + 0.5;
        let half = t.powf(0.5 * (xm + 0.5));
        (2.0 * PI).sqrt() * half * (half * (-t).exp()) * lanczos_sum(xm)
    }
}

/// Euler Gamma function for positive arguments.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("gamma_fn", format!("x = {x} must be positive")));
    }
    Ok(gamma_real(x))
}

/// Natural log of the Gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)
    } else {
        let xm = x - 1.0;
        let t = xm + LANCZOS_G + 0.5;
        0.5 * (2.0 * PI).ln() + (xm + 0.5) * t.ln() - t + lanczos_sum(xm).ln()
    }
}

/// `ln C(n, k)` for real `n`, integer `k`; used in log-space series.
pub(crate) fn ln_factorial(n: u32) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

/// Binomial coefficient as a float; exact for the small arguments used here.
pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Regularized upper incomplete Gamma `Q(n, x)` for integer order.
///
/// Uses the finite Poisson series `Q(n, x) = e^{-x} Σ_{i<n} x^i / i!`.
pub fn reg_upper_inc_gamma(n: u32, x: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("reg_upper_inc_gamma", "order must be at least 1"));
    }
    if !(x >= 0.0) {
        return Err(Error::domain("reg_upper_inc_gamma", format!("x = {x} must be non-negative")));
    }
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    let value = if x < 600.0 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for i in 1..n {
            term *= x / i as f64;
            sum += term;
        }
        (-x).exp() * sum
    } else {
        // e^{-x} underflows before the sum overflows; stay in log space.
        let lx = x.ln();
        (0..n).map(|i| (-x + i as f64 * lx - ln_factorial(i)).exp()).sum()
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Alzer's upper bound `1 - (1 - e^{-c x})^n` with `c = (n!)^{-1/n}`.
pub fn alzer_bound(n: u32, x: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::domain("alzer_bound", "order must be at least 1"));
    }
    if !(x >= 0.0) {
        return Err(Error::domain("alzer_bound", format!("x = {x} must be non-negative")));
    }
    let c = alzer_constant(n);
    let y = (-c * x).exp();
    // 1 - (1 - y)^n without cancellation for small y.
    Ok(-(n as f64 * (-y).ln_1p()).exp_m1())
}

/// `(n!)^{-1/n}`.
pub fn alzer_constant(n: u32) -> f64 {
    (-ln_factorial(n) / n as f64).exp()
}

fn series_1bc(b: f64, c: f64, z: f64) -> Option<f64> {
    // Σ (b)_k / (c)_k z^k, the (1)_k / k! factor being one.
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..SERIES_MAX_TERMS {
        let kf = k as f64;
        term *= (b + kf) / (c + kf) * z;
        sum += term;
        if term.abs() <= SERIES_EPS * sum.abs() {
            return Some(sum);
        }
    }
    None
}

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-8
}

/// Reciprocal Gamma, zero at the poles.
fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && near_integer(x) {
        0.0
    } else {
        1.0 / gamma_real(x)
    }
}

/// Gauss hypergeometric function `₂F₁(1, b; c; z)` for `c > b > 0`, `z <= 0`.
///
/// Strategy by argument:
/// * `-0.5 <= z <= 0`: direct series.
/// * `-3 <= z < -0.5`: Pfaff transformation onto `z / (z - 1) ∈ (1/3, 3/4]`.
/// * `z < -3`: the `1/z` connection formula, which for `a = 1` collapses to a
///   single series plus a closed-form power term. When `b` is an integer the
///   connection has a pole and the Euler integral is used instead.
pub fn gauss_2f1(b: f64, c: f64, z: f64) -> Result<f64> {
    if !(b > 0.0) || !(c > b) || !b.is_finite() || !c.is_finite() {
        return Err(Error::domain("gauss_2f1", format!("need c > b > 0, got b = {b}, c = {c}")));
    }
    if !(z <= 0.0) || !z.is_finite() {
        return Err(Error::domain("gauss_2f1", format!("z = {z} must be finite and <= 0")));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z >= -0.5 {
        if let Some(v) = series_1bc(b, c, z) {
            return Ok(v);
        }
    } else if z >= -3.0 {
        let w = z / (z - 1.0);
        if let Some(v) = series_1bc(c - b, c, w) {
            return Ok(v / (1.0 - z));
        }
    } else if !near_integer(b) {
        return Ok(connection_large(b, c, z));
    }
    Ok(euler_integral(b, c, z))
}

fn connection_large(b: f64, c: f64, z: f64) -> f64 {
    // ₂F₁(1,b;c;z) = Γ(c)Γ(b-1)/(Γ(b)Γ(c-1)) (-z)^{-1} ₂F₁(1, 2-c; 2-b; 1/z)
    //              + Γ(c)Γ(1-b)/Γ(c-b) (-z)^{-b} (1 - 1/z)^{c-b-1}
    let x = 1.0 / z;
    let gc = gamma_real(c);
    let first = if rgamma(c - 1.0) == 0.0 {
        0.0
    } else {
        let inner = series_in_inverse(2.0 - c, 2.0 - b, x);
        gc * gamma_real(b - 1.0) * rgamma(b) * rgamma(c - 1.0) * inner / (-z)
    };
    let second = gc * gamma_real(1.0 - b) * rgamma(c - b) * (-z).powf(-b) * (1.0 - x).powf(c - b - 1.0);
    first + second
}

fn series_in_inverse(p: f64, q: f64, x: f64) -> f64 {
    // ₂F₁(1, p; q; x) with |x| < 1/3; q may be negative but is never a pole
    // because b is not an integer on this path.
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..SERIES_MAX_TERMS {
        let kf = k as f64;
        term *= (p + kf) / (q + kf) * x;
        sum += term;
        if term.abs() <= SERIES_EPS * sum.abs() {
            break;
        }
    }
    sum
}

fn euler_integral(b: f64, c: f64, z: f64) -> f64 {
    // Γ(c)/(Γ(b)Γ(c-b)) ∫_0^1 t^{b-1} (1-t)^{c-b-1} / (1 - z t) dt
    let pref = (ln_gamma(c) - ln_gamma(b) - ln_gamma(c - b)).exp();
    pref * tanh_sinh_unit(|t, one_minus_t| t.powf(b - 1.0) * one_minus_t.powf(c - b - 1.0) / (1.0 - z * t))
}

/// Double-exponential quadrature on `[0, 1]`. The integrand receives both
/// `t` and `1 - t` so endpoint singularities keep full precision.
pub(crate) fn tanh_sinh_unit<F: Fn(f64, f64) -> f64>(f: F) -> f64 {
    let h0 = 1.0 / 16.0;
    let mut prev = f64::NAN;
    let mut h = h0;
    for _level in 0..10 {
        let mut sum = 0.0;
        let n = (4.5 / h) as i64;
        for k in -n..=n {
            let s = k as f64 * h;
            let u = 0.5 * PI * s.sinh();
            let cosh_u = u.cosh();
            // t = (1 + tanh u) / 2, 1 - t = (1 - tanh u) / 2 = e^{-u} / (2 cosh u)
            let e = (-u).exp();
            let one_minus_t = 0.5 * e / cosh_u;
            let t = 0.5 * (1.0 / e) / cosh_u;
            if t <= 0.0 || one_minus_t <= 0.0 {
                continue;
            }
            let w = 0.5 * h * 0.5 * PI * s.cosh() / (cosh_u * cosh_u);
            let fx = f(t, one_minus_t);
            if fx.is_finite() {
                sum += w * fx;
            }
        }
        if (sum - prev).abs() <= 1e-13 * sum.abs() {
            return sum;
        }
        prev = sum;
        h *= 0.5;
    }
    prev
}

/// Pathloss interference functional
/// `F(t1, t2) = 2 t1 / (t2 - 2) · ₂F₁(1, 1 - 2/t2; 2 - 2/t2; -t1)`.
///
/// Equivalently `F(t1, t2) = 2 ∫_1^∞ x / (1 + x^{t2} / t1) dx`.
pub fn pathloss_functional(t1: f64, t2: f64) -> Result<f64> {
    if !(t2 > 2.0) || !t2.is_finite() {
        return Err(Error::domain("pathloss_functional", format!("pathloss exponent {t2} must exceed 2")));
    }
    if !(t1 >= 0.0) || !t1.is_finite() {
        return Err(Error::domain("pathloss_functional", format!("t1 = {t1} must be finite and non-negative")));
    }
    if t1 == 0.0 {
        return Ok(0.0);
    }
    let b = 1.0 - 2.0 / t2;
    let hyp = gauss_2f1(b, b + 1.0, -t1)?;
    Ok(2.0 * t1 / (t2 - 2.0) * hyp)
}

/// `Γ(1 + 2/η) Γ(1 - 2/η)`, the no-guard-zone interference constant.
pub fn interference_constant(eta: f64) -> Result<f64> {
    if !(eta > 2.0) {
        return Err(Error::domain("interference_constant", format!("pathloss exponent {eta} must exceed 2")));
    }
    let d = 2.0 / eta;
    Ok(gamma_real(1.0 + d) * gamma_real(1.0 - d))
}
