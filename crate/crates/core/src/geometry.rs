//! Cluster geometry: normalized distances, multiplicity grouping, elementary
//! symmetric coefficients and the in-cluster availability product.

use serde::{Deserialize, Serialize};

use crate::energy::EnergyProfile;
use crate::{Error, Result};

/// Relative gap below which two `ω^η` values are the same multiplicity group.
pub const MULTIPLICITY_TOL: f64 = 1e-9;
/// Relative gap below which a nominally distinct geometry is treated as repeated.
pub const SNAP_TOL: f64 = 1e-6;

/// Sorted distances `d_1 ≤ … ≤ d_K` from a receiver to its serving cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterGeometry {
    distances: Vec<f64>,
    eta: f64,
    omega: Vec<f64>,
    omega_eta: Vec<f64>,
}

impl ClusterGeometry {
    pub fn new(distances: Vec<f64>, eta: f64) -> Result<Self> {
        if distances.is_empty() {
            return Err(Error::invalid("distances", "cluster must contain at least one transmitter"));
        }
        if !(eta > 2.0) || !eta.is_finite() {
            return Err(Error::invalid("eta", format!("eta must exceed 2, got {eta}")));
        }
        if let Some(bad) = distances.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
            return Err(Error::invalid("distances", format!("{bad} is not a positive finite length")));
        }
        let mut distances = distances;
        distances.sort_by(|a, b| a.total_cmp(b));
        let dk = *distances.last().unwrap();
        let omega: Vec<f64> = distances.iter().map(|d| d / dk).collect();
        let omega_eta = omega.iter().map(|w| w.powf(eta)).collect();
        Ok(Self { distances, eta, omega, omega_eta })
    }

    /// Geometry known only through `ω_i = d_i / d_K`; `d_K` is set to one.
    pub fn normalized(omega: Vec<f64>, eta: f64) -> Result<Self> {
        let max = omega.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if (max - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("omega", format!("largest normalized distance must be 1, got {max}")));
        }
        Self::new(omega, eta)
    }

    pub fn k(&self) -> usize {
        self.distances.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn d_k(&self) -> f64 {
        *self.distances.last().unwrap()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// The multiset `Ω = {ω_i^η}`.
    pub fn omega_eta(&self) -> &[f64] {
        &self.omega_eta
    }

    /// The `k` nearest transmitters as a cluster of their own.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k() {
            return Err(Error::invalid("k", format!("{k} is outside 1..={}", self.k())));
        }
        Self::new(self.distances[..k].to_vec(), self.eta)
    }

    pub fn multiplicities(&self) -> Multiplicities {
        group_values(&self.omega_eta, MULTIPLICITY_TOL)
    }

    /// Smallest relative gap between consecutive `ω^η` values; infinite for `K = 1`.
    pub fn min_relative_gap(&self) -> f64 {
        min_relative_gap(&self.omega_eta)
    }

    /// True when every `ω^η` is separated from the others by more than `tol`.
    pub fn is_distinct(&self, tol: f64) -> bool {
        self.min_relative_gap() > tol
    }
}

/// Unique values `δ_u^η` with multiplicities `n_u`, in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multiplicities {
    pub values: Vec<f64>,
    pub counts: Vec<u32>,
}

impl Multiplicities {
    pub fn tau(&self) -> usize {
        self.values.len()
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }
}

pub fn group_multiplicities(geometry: &ClusterGeometry) -> Multiplicities {
    geometry.multiplicities()
}

/// Merge values within relative distance `tol` of the group's smallest member.
/// Each group is represented by its largest member so `ω_K^η = 1` survives.
pub fn group_values(values: &[f64], tol: f64) -> Multiplicities {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut out = Multiplicities { values: Vec::new(), counts: Vec::new() };
    let mut anchor = f64::NAN;
    for v in sorted {
        if !out.values.is_empty() && (v - anchor).abs() <= tol * v.abs().max(anchor.abs()) {
            *out.values.last_mut().unwrap() = v;
            *out.counts.last_mut().unwrap() += 1;
        } else {
            anchor = v;
            out.values.push(v);
            out.counts.push(1);
        }
    }
    out
}

pub(crate) fn min_relative_gap(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.windows(2).map(|w| (w[1] - w[0]) / w[1].abs().max(w[0].abs())).fold(f64::INFINITY, f64::min)
}

/// Elementary symmetric polynomials `e_0..e_K`.
pub fn elementary_symmetric(values: &[f64]) -> Vec<f64> {
    let k = values.len();
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for (n, &x) in values.iter().enumerate() {
        for j in (1..=n + 1).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// `α_i = (−1)^i e_{K−i}` for `i = 0..K−1`, so that
/// `Σ_i α_i x^i + (−x)^K = Π_l (x_l − x)`.
pub fn alpha_coefficients(values: &[f64]) -> Vec<f64> {
    let k = values.len();
    let e = elementary_symmetric(values);
    (0..k).map(|i| if i % 2 == 0 { e[k - i] } else { -e[k - i] }).collect()
}

/// `G·(α_m(Ω̂) − α_m(Ω))` for `m = 0..K−1`, with `Ω̂_i = Ω_i / q_i`.
///
/// Expanded as the coefficients of `Π_i (Ω_i + q_i s)` so that idle
/// probabilities of exactly zero are handled without dividing by them.
pub fn scaled_alpha_difference(omega_eta: &[f64], q: &[f64]) -> Vec<f64> {
    assert_eq!(omega_eta.len(), q.len());
    let k = omega_eta.len();
    // hat[m] = coefficient of s^m = G · e_{K−m}(Ω̂)
    let mut hat = vec![0.0; k + 1];
    hat[0] = 1.0;
    for (n, (&w, &qi)) in omega_eta.iter().zip(q).enumerate() {
        for m in (0..=n + 1).rev() {
            let shifted = if m > 0 { qi * hat[m - 1] } else { 0.0 };
            hat[m] = w * hat[m] + shifted;
        }
    }
    let g: f64 = q.iter().product();
    let e = elementary_symmetric(omega_eta);
    (0..k)
        .map(|m| {
            let d = hat[m] - g * e[k - m];
            if m % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect()
}

/// Per-transmitter idle probabilities `q_tr,i` of the serving cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InClusterAvailability {
    q: Vec<f64>,
    profiles: Option<Vec<EnergyProfile>>,
}

impl InClusterAvailability {
    pub fn new(q: Vec<f64>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::invalid("q_tr", "need one idle probability per cluster member"));
        }
        if let Some(bad) = q.iter().find(|v| !(**v >= 0.0 && **v < 1.0)) {
            return Err(Error::invalid("q_tr", format!("{bad} is not in [0, 1)")));
        }
        Ok(Self { q, profiles: None })
    }

    pub fn uniform(q: f64, k: usize) -> Result<Self> {
        Self::new(vec![q; k])
    }

    /// `q_tr,i = 1 − p_tr,i` from each member's buffer profile.
    pub fn from_profiles(profiles: Vec<EnergyProfile>) -> Result<Self> {
        let q = profiles.iter().map(|p| p.transmission_probability().map(|t| 1.0 - t)).collect::<Result<Vec<_>>>()?;
        let mut out = Self::new(q)?;
        out.profiles = Some(profiles);
        Ok(out)
    }

    pub fn k(&self) -> usize {
        self.q.len()
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn profiles(&self) -> Option<&[EnergyProfile]> {
        self.profiles.as_deref()
    }

    /// `G = Π q_tr,i`, the probability that no cluster member transmits.
    pub fn g(&self) -> f64 {
        self.q.iter().product()
    }

    /// `Ω̂ = {ω_i^η / q_tr,i}`, undefined when some member never idles.
    pub fn omega_hat(&self, omega_eta: &[f64]) -> Result<Vec<f64>> {
        if self.q.contains(&0.0) {
            return Err(Error::domain("omega_hat", "an idle probability of zero leaves Ω̂ undefined"));
        }
        Ok(omega_eta.iter().zip(&self.q).map(|(w, q)| w / q).collect())
    }

    /// Same availability restricted to the `k` nearest members.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k() {
            return Err(Error::invalid("k", format!("{k} is outside 1..={}", self.k())));
        }
        Ok(Self { q: self.q[..k].to_vec(), profiles: self.profiles.as_ref().map(|p| p[..k].to_vec()) })
    }
}

pub fn availability_product(avail: &InClusterAvailability) -> f64 {
    avail.g()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn subset_alpha(values: &[f64]) -> Vec<f64> {
        let k = values.len();
        let mut e = vec![0.0; k + 1];
        for mask in 0u32..(1 << k) {
            let prod: f64 = (0..k).filter(|i| mask >> i & 1 == 1).map(|i| values[i]).product();
            e[mask.count_ones() as usize] += prod;
        }
        (0..k).map(|i| if i % 2 == 0 { e[k - i] } else { -e[k - i] }).collect()
    }

    #[test]
    fn grouping_examples() {
        let g = ClusterGeometry::new(vec![10.0, 5.0, 10.0, 10.0], 4.0).unwrap();
        assert_eq!(g.distances(), &[5.0, 10.0, 10.0, 10.0]);
        let m = g.multiplicities();
        assert_eq!(m.values, vec![0.0625, 1.0]);
        assert_eq!(m.counts, vec![1, 3]);
        let d = ClusterGeometry::new(vec![10.0, 12.0, 14.0, 16.0], 4.0).unwrap();
        let m = group_multiplicities(&d);
        assert_eq!(m.tau(), 4);
        assert!(m.counts.iter().all(|&c| c == 1));
        let one = ClusterGeometry::new(vec![7.0], 3.0).unwrap();
        assert_eq!(one.multiplicities().values, vec![1.0]);
        assert!(one.is_distinct(SNAP_TOL));
    }

    #[test]
    fn geometry_validation() {
        assert!(ClusterGeometry::new(vec![], 4.0).is_err());
        assert!(ClusterGeometry::new(vec![1.0], 2.0).is_err());
        assert!(ClusterGeometry::new(vec![-1.0, 2.0], 4.0).is_err());
        assert!(ClusterGeometry::normalized(vec![0.5, 0.9], 4.0).is_err());
        let n = ClusterGeometry::normalized(vec![1.0, 0.5], 4.0).unwrap();
        assert_eq!(n.omega(), &[0.5, 1.0]);
        assert_eq!(n.d_k(), 1.0);
        let t = ClusterGeometry::new(vec![2.0, 4.0, 8.0], 4.0).unwrap().truncated(2).unwrap();
        assert_eq!(t.omega(), &[0.5, 1.0]);
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_coefficients(&[1.0, 2.0, 3.0]), vec![6.0, -11.0, 6.0]);
        assert_eq!(subset_alpha(&[1.0, 2.0, 3.0]), vec![6.0, -11.0, 6.0]);
        assert_eq!(alpha_coefficients(&[0.3]), vec![0.3]);
        let a = 1.7;
        let al = alpha_coefficients(&[a, a, a]);
        assert!((al[0] - a * a * a).abs() < 1e-14);
        assert!((al[1] + 3.0 * a * a).abs() < 1e-14);
        assert!((al[2] - 3.0 * a).abs() < 1e-14);
    }

    #[test]
    fn scaled_difference_matches_definition() {
        let w = [0.0625, 0.3, 1.0];
        let q = [0.4, 0.5, 0.6];
        let g: f64 = q.iter().product();
        let hat: Vec<f64> = w.iter().zip(&q).map(|(a, b)| a / b).collect();
        let ah = alpha_coefficients(&hat);
        let ap = alpha_coefficients(&w);
        let d = scaled_alpha_difference(&w, &q);
        for m in 0..3 {
            assert!((d[m] - g * (ah[m] - ap[m])).abs() < 1e-14);
        }
        // q → 0 leaves only G·e_K(Ω̂) = Π Ω_i
        let d0 = scaled_alpha_difference(&w, &[0.0, 0.0, 0.0]);
        assert!((d0[0] - 0.0625 * 0.3).abs() < 1e-15 && d0[1] == 0.0 && d0[2] == 0.0);
    }

    #[test]
    fn availability_examples() {
        assert_eq!(InClusterAvailability::uniform(0.5, 3).unwrap().g(), 0.125);
        assert_eq!(availability_product(&InClusterAvailability::new(vec![0.37]).unwrap()), 0.37);
        assert_eq!(InClusterAvailability::new(vec![0.4, 0.0]).unwrap().g(), 0.0);
        assert!(InClusterAvailability::new(vec![1.0]).is_err());
        assert!(InClusterAvailability::new(vec![0.4, 0.0]).unwrap().omega_hat(&[0.5, 1.0]).is_err());
        let prof = EnergyProfile::new(0.5, 1, 0.5).unwrap();
        let a = InClusterAvailability::from_profiles(vec![prof; 2]).unwrap();
        assert!((a.q()[0] - 2.0 / 3.0).abs() < 1e-15);
        let hat = InClusterAvailability::new(vec![0.5, 0.25]).unwrap().omega_hat(&[0.5, 1.0]).unwrap();
        assert_eq!(hat, vec![1.0, 4.0]);
    }

    proptest! {
        #[test]
        fn alpha_matches_enumeration(vals in prop::collection::vec(0.01f64..5.0, 1..=8)) {
            let fast = alpha_coefficients(&vals);
            let slow = subset_alpha(&vals);
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
            }
        }

        #[test]
        fn alpha_is_characteristic_polynomial(vals in prop::collection::vec(0.01f64..1.0, 1..=7)) {
            // Σ α_i x^i + (−x)^K = Π (x_l − x), so at x = x_j the sum is (−1)^{K−1} x_j^K
            let k = vals.len();
            let a = alpha_coefficients(&vals);
            for &x in &vals {
                let s: f64 = a.iter().enumerate().map(|(i, c)| c * x.powi(i as i32)).sum();
                let target = if k % 2 == 1 { x.powi(k as i32) } else { -x.powi(k as i32) };
                let scale: f64 = a.iter().enumerate().map(|(i, c)| (c * x.powi(i as i32)).abs()).sum();
                prop_assert!((s - target).abs() <= 1e-12 * scale.max(1e-300));
            }
            // and away from the roots the product form holds
            let x: f64 = 0.37;
            let s: f64 = a.iter().enumerate().map(|(i, c)| c * x.powi(i as i32)).sum::<f64>() + (-x).powi(k as i32);
            let prod: f64 = vals.iter().map(|v| v - x).product();
            prop_assert!((s - prod).abs() < 1e-12);
        }

        #[test]
        fn grouping_idempotent_and_order_invariant(
            base in prop::collection::vec(0.05f64..1.0, 1..=6),
            dup in prop::collection::vec(0usize..6, 0..4),
            seed in any::<u64>(),
        ) {
            let mut vals = base.clone();
            for i in dup { vals.push(base[i % base.len()]); }
            let g = group_values(&vals, MULTIPLICITY_TOL);
            prop_assert_eq!(g.total() as usize, vals.len());
            let expanded: Vec<f64> = g.values.iter().zip(&g.counts)
                .flat_map(|(v, c)| std::iter::repeat(*v).take(*c as usize)).collect();
            prop_assert_eq!(&group_values(&expanded, MULTIPLICITY_TOL), &g);
            let mut shuffled = vals.clone();
            let n = shuffled.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            prop_assert_eq!(group_values(&shuffled, MULTIPLICITY_TOL), g);
        }
    }
}
