//! Distribution of the received signal sum `S_K = Σ 1_i H_i ω_i^{−η}`.

use crate::geometry::{
    group_values, scaled_alpha_difference, ClusterGeometry, InClusterAvailability, Multiplicities, SNAP_TOL,
};
use crate::specfun::{binomial, reg_upper_inc_gamma};
use crate::{Error, Result};

/// Largest cluster handled by the multiplicity expansion.
pub const MAX_CLUSTER_SIZE: usize = 12;

/// Partial-fraction weight `A_m(n_u, v)` of `Q(v, δ_u^η x)`.
///
/// `values` are the unique `δ^η`, `counts` their multiplicities; `u` is
/// zero-based and `v` ranges over `1..=counts[u]`.
pub fn partial_fraction_coeff(m: usize, values: &[f64], counts: &[u32], u: usize, v: u32) -> f64 {
    assert_eq!(values.len(), counts.len());
    let nu = counts[u];
    assert!(v >= 1 && v <= nu, "v = {v} outside 1..={nu}");
    let du = values[u];
    let mut k = vec![0u32; values.len()];
    let mut total = 0.0;
    compositions(&mut k, 0, nu - v, &mut |k| {
        let ku = k[u];
        if ku as usize > m {
            return;
        }
        let mut term = binomial(m as u32, ku) * du.powi(m as i32 - ku as i32);
        for (j, (&dj, &nj)) in values.iter().zip(counts).enumerate() {
            if j == u {
                continue;
            }
            term *= binomial(nj + k[j] - 1, k[j]) * (dj - du).powi(-((nj + k[j]) as i32));
        }
        total += term;
    });
    let sign = if (nu - v) % 2 == 0 { 1.0 } else { -1.0 };
    sign * du.powi(-(v as i32)) * total
}

/// Visit every non-negative integer vector with the given sum, lexicographically.
fn compositions(k: &mut [u32], pos: usize, remaining: u32, visit: &mut dyn FnMut(&[u32])) {
    if pos + 1 == k.len() {
        k[pos] = remaining;
        visit(k);
        k[pos] = 0;
        return;
    }
    for first in (0..=remaining).rev() {
        k[pos] = first;
        compositions(k, pos + 1, remaining - first, visit);
    }
    k[pos] = 0;
}

/// Group `Ω` for the multiplicity expansion and return the snapped multiset in
/// the original order alongside its grouping.
pub(crate) fn snapped_groups(omega_eta: &[f64]) -> (Vec<f64>, Multiplicities) {
    let groups = group_values(omega_eta, SNAP_TOL);
    // omega_eta is sorted ascending, so groups are consumed in order
    let mut snapped = Vec::with_capacity(omega_eta.len());
    for (v, c) in groups.values.iter().zip(&groups.counts) {
        snapped.extend(std::iter::repeat(*v).take(*c as usize));
    }
    (snapped, groups)
}

/// Weights `w[u][v−1] = Σ_m G(α_m(Ω̂) − α_m(Ω)) A_m(n_u, v)` of the Erlang mixture.
pub fn mixture_coefficients(
    geometry: &ClusterGeometry,
    avail: &InClusterAvailability,
) -> Result<(Multiplicities, Vec<Vec<f64>>)> {
    let k = geometry.k();
    if k > MAX_CLUSTER_SIZE {
        return Err(Error::ClusterSize(k));
    }
    if avail.k() != k {
        return Err(Error::invalid("q_tr", format!("{} idle probabilities for a cluster of {k}", avail.k())));
    }
    let (snapped, groups) = snapped_groups(geometry.omega_eta());
    let diff = scaled_alpha_difference(&snapped, avail.q());
    let weights = (0..groups.tau())
        .map(|u| {
            (1..=groups.counts[u])
                .map(|v| {
                    diff.iter()
                        .enumerate()
                        .map(|(m, d)| d * partial_fraction_coeff(m, &groups.values, &groups.counts, u, v))
                        .sum()
                })
                .collect()
        })
        .collect();
    Ok((groups, weights))
}

/// `Pr[S_K > x]`.
pub fn sk_ccdf(geometry: &ClusterGeometry, avail: &InClusterAvailability, x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain("sk_ccdf", format!("x = {x} must be non-negative")));
    }
    let (groups, weights) = mixture_coefficients(geometry, avail)?;
    let mut total = 0.0;
    for (u, w_u) in weights.iter().enumerate() {
        for (vi, w) in w_u.iter().enumerate() {
            total += w * reg_upper_inc_gamma(vi as u32 + 1, groups.values[u] * x)?;
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    /// CCDF of a sum of independent exponentials with the given rates, by
    /// uniformization of the sequential phase-type chain.
    pub(crate) fn hypoexp_ccdf(rates: &[f64], x: f64) -> f64 {
        if rates.is_empty() {
            return 0.0;
        }
        let lam = rates.iter().cloned().fold(0.0, f64::max);
        let n = rates.len();
        let mut state = vec![0.0; n];
        state[0] = 1.0;
        let lx = lam * x;
        let mut log_pois = -lx;
        let mut acc = 0.0;
        let mut j = 0u64;
        loop {
            let surv: f64 = state.iter().sum();
            let weight = if log_pois < -700.0 { 0.0 } else { log_pois.exp() };
            acc += weight * surv;
            j += 1;
            if (j as f64) > lx + 40.0 * lx.sqrt().max(1.0) + 50.0 {
                break;
            }
            let mut next = vec![0.0; n];
            for i in 0..n {
                let stay = 1.0 - rates[i] / lam;
                next[i] += state[i] * stay;
                if i + 1 < n {
                    next[i + 1] += state[i] * rates[i] / lam;
                }
            }
            state = next;
            log_pois += lx.ln() - (j as f64).ln();
        }
        acc
    }

    /// Enumerate activity subsets; each contributes its hypoexponential CCDF.
    pub(crate) fn subset_oracle(omega_eta: &[f64], q: &[f64], x: f64) -> f64 {
        let k = omega_eta.len();
        let mut total = 0.0;
        for mask in 1u32..(1 << k) {
            let mut prob = 1.0;
            let mut rates = Vec::new();
            for i in 0..k {
                if mask >> i & 1 == 1 {
                    prob *= 1.0 - q[i];
                    rates.push(omega_eta[i]);
                } else {
                    prob *= q[i];
                }
            }
            if prob > 0.0 {
                total += prob * hypoexp_ccdf(&rates, x);
            }
        }
        total
    }

    #[test]
    fn oracle_sanity() {
        assert!((hypoexp_ccdf(&[2.0], 0.7) - (-1.4f64).exp()).abs() < 1e-14);
        // Erlang(2, 1): e^{-x}(1 + x)
        assert!((hypoexp_ccdf(&[1.0, 1.0], 1.3) - (-1.3f64).exp() * 2.3).abs() < 1e-13);
    }

    #[test]
    fn single_node_origin() {
        let g = ClusterGeometry::new(vec![3.0], 4.0).unwrap();
        let a = InClusterAvailability::new(vec![0.3]).unwrap();
        assert!((sk_ccdf(&g, &a, 0.0).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn two_stage_hypoexponential() {
        // all-active limit with rates a < b = 1
        let a = 0.2f64;
        let g = ClusterGeometry::normalized(vec![a.powf(0.25), 1.0], 4.0).unwrap();
        let a = g.omega_eta()[0];
        let av = InClusterAvailability::new(vec![0.0, 0.0]).unwrap();
        for &x in &[0.0, 0.3, 1.0, 4.0, 12.0] {
            let exact = ((-a * x).exp() - a * (-x).exp()) / (1.0 - a);
            assert!((sk_ccdf(&g, &av, x).unwrap() - exact).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn repeated_geometry_matches_subsets() {
        let g = ClusterGeometry::new(vec![5.0, 10.0, 10.0], 4.0).unwrap();
        let q = vec![0.4, 0.5, 0.6];
        let a = InClusterAvailability::new(q.clone()).unwrap();
        let v = sk_ccdf(&g, &a, 2.0).unwrap();
        let o = subset_oracle(g.omega_eta(), &q, 2.0);
        assert!((v - o).abs() < 1e-8, "{v} vs {o}");
        let g4 = ClusterGeometry::new(vec![5.0, 10.0, 10.0, 10.0], 4.0).unwrap();
        let m = g4.multiplicities();
        assert_eq!(m.values, vec![0.0625, 1.0]);
        let q4 = vec![0.3, 0.45, 0.5, 0.7];
        let a4 = InClusterAvailability::new(q4.clone()).unwrap();
        for &x in &[0.0, 0.5, 2.0, 9.0, 40.0] {
            let v = sk_ccdf(&g4, &a4, x).unwrap();
            let o = subset_oracle(g4.omega_eta(), &q4, x);
            assert!((v - o).abs() < 1e-8, "x={x}: {v} vs {o}");
        }
    }

    #[test]
    fn empty_composition_case() {
        // τ = 1: A_m(n, n) = δ^{m − n}
        let d = 0.37;
        for n in 1..5u32 {
            for m in 0..n as usize {
                let a = partial_fraction_coeff(m, &[d], &[n], 0, n);
                assert!((a - d.powi(m as i32 - n as i32)).abs() < 1e-12 * a.abs());
            }
        }
    }

    #[test]
    fn distinct_case_is_ratio_form() {
        let vals = [0.11, 0.42, 1.0];
        for u in 0..3 {
            let denom: f64 = (0..3).filter(|&j| j != u).map(|j| vals[j] - vals[u]).product();
            for m in 0..3 {
                let a = partial_fraction_coeff(m, &vals, &[1, 1, 1], u, 1);
                let ratio = vals[u].powi(m as i32 - 1) / denom;
                assert!((a - ratio).abs() < 1e-12 * ratio.abs(), "u={u} m={m}");
            }
        }
    }

    #[test]
    fn rejects_large_clusters() {
        let g = ClusterGeometry::new((1..=13).map(|i| i as f64).collect(), 4.0).unwrap();
        let a = InClusterAvailability::uniform(0.5, 13).unwrap();
        assert_eq!(sk_ccdf(&g, &a, 1.0), Err(Error::ClusterSize(13)));
    }

    fn random_geometry(seed: &[f64], repeat: bool) -> Vec<f64> {
        let mut d: Vec<f64> = seed.iter().map(|s| 1.0 + 9.0 * s).collect();
        if repeat && d.len() >= 2 {
            let last = d.len() - 1;
            d[last] = d[0];
        }
        d
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn matches_subset_oracle(
            seed in prop::collection::vec(0.0f64..1.0, 1..=5),
            q in prop::collection::vec(0.0f64..0.95, 5),
            repeat in any::<bool>(),
            x in 0.0f64..20.0,
        ) {
            let d = random_geometry(&seed, repeat);
            let g = ClusterGeometry::new(d, 4.0).unwrap();
            // keep well separated or exactly repeated
            prop_assume!(g.multiplicities().values.windows(2).all(|w| w[1] / w[0] > 1.05));
            let q = q[..g.k()].to_vec();
            let a = InClusterAvailability::new(q.clone()).unwrap();
            let v = sk_ccdf(&g, &a, x).unwrap();
            let o = subset_oracle(g.omega_eta(), &q, x);
            prop_assert!((v - o).abs() < 1e-8, "{} vs {}", v, o);
        }
    }
}
