//! Poisson point generation and interference sampling.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use super::stats::MeanEstimate;
use super::{cap_window, map_blocks, trial_rng, Window};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dist_sq(&self, o: &Point) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        dx * dx + dy * dy
    }
}

/// Homogeneous PPP on the disk of radius `radius` around the origin: a
/// Poisson count followed by independent uniform positions.
pub(crate) fn ppp_in_disk<R: Rng + ?Sized>(rng: &mut R, intensity: f64, radius: f64) -> Vec<Point> {
    let mean = intensity * PI * radius * radius;
    let n = if mean > 0.0 { Poisson::new(mean).map(|d| d.sample(rng) as usize).unwrap_or(0) } else { 0 };
    (0..n)
        .map(|_| {
            let r = radius * rng.random::<f64>().sqrt();
            let a = 2.0 * PI * rng.random::<f64>();
            Point { x: r * a.cos(), y: r * a.sin() }
        })
        .collect()
}

pub fn sample_ppp(intensity: f64, radius: f64, seed: u64) -> Result<Vec<Point>> {
    if !(intensity >= 0.0) || !intensity.is_finite() {
        return Err(Error::invalid("intensity", format!("{intensity} must be non-negative")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::invalid("radius", format!("{radius} must be positive")));
    }
    Ok(ppp_in_disk(&mut trial_rng(seed, 0), intensity, radius))
}

/// Squared radii of a PPP of `intensity` on the annulus `inner_sq < r² ≤ outer_sq`,
/// in increasing order, fed to `f`.
///
/// Successive `πλr²` form a unit-rate Poisson process on the line.
#[inline]
pub(crate) fn for_each_radius_sq<R: Rng + ?Sized, F: FnMut(&mut R, f64)>(
    rng: &mut R,
    intensity: f64,
    inner_sq: f64,
    outer_sq: f64,
    mut f: F,
) {
    if intensity <= 0.0 {
        return;
    }
    let step = 1.0 / (PI * intensity);
    let mut r2 = inner_sq;
    loop {
        let e: f64 = Exp1.sample(rng);
        r2 += e * step;
        if r2 > outer_sq {
            break;
        }
        f(rng, r2);
    }
}

/// `r^{−η}` from `r²`.
#[inline]
pub(crate) fn pathloss_sq(r2: f64, eta: f64) -> f64 {
    if eta == 4.0 {
        1.0 / (r2 * r2)
    } else {
        r2.powf(-0.5 * eta)
    }
}

/// Rayleigh-faded interference `Σ P H r^{−η}` from a PPP on an annulus.
#[inline]
pub(crate) fn annulus_interference<R: Rng + ?Sized>(
    rng: &mut R,
    intensity: f64,
    power: f64,
    inner_sq: f64,
    outer_sq: f64,
    eta: f64,
) -> f64 {
    let mut total = 0.0;
    for_each_radius_sq(rng, intensity, inner_sq, outer_sq, |rng, r2| {
        let h: f64 = Exp1.sample(rng);
        total += h * pathloss_sq(r2, eta);
    });
    power * total
}

/// Relative bias of `s·I` allowed from truncating the field at the window edge.
const LAPLACE_TAIL_BIAS: f64 = 5e-4;

/// Sample mean of `exp(−s I)` where `I` is the interference of a PPP of
/// intensity `intensity` and power `power` outside a guard disk of radius `guard`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_laplace(
    s: f64,
    intensity: f64,
    power: f64,
    guard: f64,
    eta: f64,
    samples: u64,
    seed: u64,
    window: Window,
) -> Result<MeanEstimate> {
    if !(s >= 0.0) || !(intensity >= 0.0) || !(power > 0.0) || !(guard >= 0.0) || !(eta > 2.0) {
        return Err(Error::invalid(
            "laplace",
            format!("need s, intensity, guard >= 0, power > 0, eta > 2; got s={s}, intensity={intensity}, power={power}, guard={guard}, eta={eta}"),
        ));
    }
    if samples == 0 {
        return Err(Error::invalid("samples", "must be at least 1"));
    }
    let radius = match window {
        Window::Fixed(r) => r,
        Window::Auto => {
            let scale = if intensity > 0.0 { guard.max(intensity.powf(-0.5)) } else { guard.max(1.0) };
            let tail = (s * 2.0 * PI * intensity * power / ((eta - 2.0) * LAPLACE_TAIL_BIAS)).powf(1.0 / (eta - 2.0));
            cap_window((5.0 * scale).max(tail), intensity)
        }
    };
    if radius <= guard {
        return Err(Error::invalid("window_radius", format!("{radius} must exceed the guard radius {guard}")));
    }
    let (g2, r2) = (guard * guard, radius * radius);
    let parts = map_blocks(
        samples,
        seed,
        |_| Ok(()),
        || (0.0f64, 0.0f64),
        |_, rng, acc| {
            let i = annulus_interference(rng, intensity, power, g2, r2, eta);
            let v = (-s * i).exp();
            acc.0 += v;
            acc.1 += v * v;
            Ok(())
        },
    )?;
    let (sum, sum_sq) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(MeanEstimate::from_sums(sum, sum_sq, samples, seed))
}

/// Distances from the origin to the `k`-th nearest point of independent PPP
/// realizations, one per sample.
pub fn sample_kth_nearest(intensity: f64, k: usize, samples: u64, seed: u64) -> Result<Vec<f64>> {
    if !(intensity > 0.0) || !intensity.is_finite() {
        return Err(Error::invalid("intensity", format!("{intensity} must be positive")));
    }
    if k == 0 {
        return Err(Error::invalid("k", "must be at least 1"));
    }
    let kf = k as f64;
    let radius = ((kf + 12.0 * kf.sqrt() + 40.0) / (PI * intensity)).sqrt();
    let parts = map_blocks(
        samples,
        seed,
        |_| Ok(()),
        Vec::new,
        |_, rng, out: &mut Vec<f64>| loop {
            let pts = ppp_in_disk(rng, intensity, radius);
            if pts.len() < k {
                continue;
            }
            let mut d: Vec<f64> = pts.iter().map(Point::norm_sq).collect();
            let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
            out.push(kth.sqrt());
            return Ok(());
        },
    )?;
    Ok(parts.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcsim::stats::{kolmogorov_pvalue, ks_statistic};

    #[test]
    fn ppp_count_mean_and_dispersion() {
        let lam = 0.02;
        let r = 20.0;
        let mean = lam * PI * r * r;
        let counts: Vec<f64> = (0..4000).map(|s| sample_ppp(lam, r, s).unwrap().len() as f64).collect();
        let n = counts.len() as f64;
        let m = counts.iter().sum::<f64>() / n;
        let v = counts.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((m - mean).abs() < 4.0 * (mean / n).sqrt(), "{m} vs {mean}");
        assert!((v / m - 1.0).abs() < 0.1, "dispersion {}", v / m);
    }

    #[test]
    fn ppp_void_probability() {
        let lam = 0.01;
        let r = 10.0;
        let n = 20_000;
        let empty = (0..n).filter(|&s| sample_ppp(lam, r, s).unwrap().is_empty()).count() as f64 / n as f64;
        let p = (-lam * PI * r * r).exp();
        assert!((empty - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn ppp_uniform_radius() {
        let pts = sample_ppp(1.0, 30.0, 3).unwrap();
        // r²/R² is uniform on the disk
        let u: Vec<f64> = pts.iter().map(|p| p.norm_sq() / 900.0).collect();
        let d = ks_statistic(&u, |x| x.clamp(0.0, 1.0));
        assert!(kolmogorov_pvalue(d, u.len()) > 1e-3);
        assert!(pts.iter().all(|p| p.norm_sq() <= 900.0));
    }

    #[test]
    fn radial_generator_matches_disk_counts() {
        let mut rng = trial_rng(5, 0);
        let lam = 0.05;
        let n = 5000;
        let mut total = 0usize;
        for _ in 0..n {
            for_each_radius_sq(&mut rng, lam, 25.0, 400.0, |_, r2| {
                assert!(r2 > 25.0 && r2 <= 400.0);
                total += 1;
            });
        }
        let mean = lam * PI * (400.0 - 25.0);
        let m = total as f64 / n as f64;
        assert!((m - mean).abs() < 4.0 * (mean / n as f64).sqrt());
    }

    #[test]
    fn kth_nearest_deterministic() {
        let a = sample_kth_nearest(0.1, 3, 1500, 9).unwrap();
        let b = sample_kth_nearest(0.1, 3, 1500, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1500);
        let c = sample_kth_nearest(0.1, 3, 1500, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn laplace_limits() {
        let e = empirical_laplace(0.0, 0.01, 1.0, 1.0, 4.0, 100, 1, Window::Auto).unwrap();
        assert_eq!(e.mean, 1.0);
        let e = empirical_laplace(1.0, 0.0, 1.0, 1.0, 4.0, 100, 1, Window::Auto).unwrap();
        assert_eq!(e.mean, 1.0);
        assert!(empirical_laplace(1.0, 0.01, 1.0, 10.0, 4.0, 100, 1, Window::Fixed(5.0)).is_err());
    }
}
