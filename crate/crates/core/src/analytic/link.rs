//! Link success probability `Pr[γ > θ]` for a served receiver.

use log::{debug, warn};

use super::laplace::interference_laplace;
use super::sk::{mixture_coefficients, MAX_CLUSTER_SIZE};
use super::NetworkModel;
use crate::geometry::{alpha_coefficients, group_values, scaled_alpha_difference, ClusterGeometry, SNAP_TOL};
use crate::specfun::{alzer_constant, binomial, interference_constant, pathloss_functional};
use crate::{Error, Result};

fn check_inputs(model: &NetworkModel, geometry: &ClusterGeometry, theta: f64) -> Result<()> {
    model.validate()?;
    if geometry.eta() != model.eta {
        return Err(Error::invalid(
            "eta",
            format!("geometry built for eta = {} but model has {}", geometry.eta(), model.eta),
        ));
    }
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::invalid("theta", format!("{theta} must be finite and non-negative")));
    }
    if geometry.k() > MAX_CLUSTER_SIZE {
        return Err(Error::ClusterSize(geometry.k()));
    }
    Ok(())
}

/// `E[e^{−s(I + σ²)}]` given the cluster radius `d_K`.
fn conditional_laplace(model: &NetworkModel, d_k: f64, s: f64) -> Result<f64> {
    let noise = (-s * model.noise).exp();
    let intrinsic = interference_laplace(s, model.out_cluster_tx_prob * model.tx_intensity, 1.0, d_k, model.eta)?;
    let mut extrinsic = 1.0;
    for t in &model.tiers {
        extrinsic *= interference_laplace(s, t.tx_prob * t.intensity, t.power, 0.0, model.eta)?;
    }
    Ok(noise * intrinsic * extrinsic)
}

fn clamp_probability(v: f64, what: &str) -> f64 {
    if !(-1e-9..=1.0 + 1e-9).contains(&v) {
        debug!("{what}: clamping {v} into [0, 1]");
    }
    v.clamp(0.0, 1.0)
}

/// Approximate CCDF for an arbitrary, possibly repeated, cluster geometry.
///
/// Exact when every multiplicity is one; otherwise each Erlang term is
/// replaced by its Alzer upper bound.
pub fn link_ccdf_theorem1(model: &NetworkModel, geometry: &ClusterGeometry, theta: f64) -> Result<f64> {
    check_inputs(model, geometry, theta)?;
    let (groups, weights) = mixture_coefficients(geometry, &model.in_cluster)?;
    let d_k = geometry.d_k();
    let dk_eta = d_k.powf(model.eta);
    let mut total = 0.0;
    for (u, w_u) in weights.iter().enumerate() {
        let delta = groups.values[u];
        for (vi, w) in w_u.iter().enumerate() {
            let v = vi as u32 + 1;
            let kappa = alzer_constant(v);
            let mut b = 0.0;
            for l in 1..=v {
                let s = kappa * l as f64 * delta * dk_eta * theta;
                let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
                b += sign * binomial(v, l) * conditional_laplace(model, d_k, s)?;
            }
            total += w * b;
        }
    }
    Ok(clamp_probability(total, "theorem 1"))
}

/// Exact CCDF for a cluster whose distances are pairwise distinct.
pub fn link_ccdf_prop1(model: &NetworkModel, geometry: &ClusterGeometry, theta: f64) -> Result<f64> {
    check_inputs(model, geometry, theta)?;
    if model.in_cluster.k() != geometry.k() {
        return Err(Error::invalid(
            "q_tr",
            format!("{} idle probabilities for a cluster of {}", model.in_cluster.k(), geometry.k()),
        ));
    }
    if !geometry.is_distinct(SNAP_TOL) {
        return Err(Error::NotDistinct(format!(
            "normalized distances {:?} have a relative gap of {:.3e}",
            geometry.omega(),
            geometry.min_relative_gap()
        )));
    }
    let w = geometry.omega_eta();
    let diff = scaled_alpha_difference(w, model.in_cluster.q());
    let d_k = geometry.d_k();
    let dk_eta = d_k.powf(model.eta);
    let mut total = 0.0;
    for (j, &wj) in w.iter().enumerate() {
        let num: f64 = diff.iter().enumerate().map(|(i, d)| d * wj.powi(i as i32)).sum();
        let den = wj * product_of_gaps(w, j);
        total += num / den * conditional_laplace(model, d_k, wj * dk_eta * theta)?;
    }
    Ok(clamp_probability(total, "proposition 1"))
}

/// `Π_{l≠j} (w_l − w_j)`.
fn product_of_gaps(w: &[f64], j: usize) -> f64 {
    w.iter().enumerate().filter(|(l, _)| *l != j).map(|(_, wl)| wl - w[j]).product()
}

/// Spread exactly or nearly repeated values symmetrically so the distinct
/// partial-fraction form applies. Returns the new values and whether any moved.
///
/// Pairs are split by `1e-6` relative. Larger groups need a wider split since
/// the cancellation across `n` nearly equal terms loses about `n − 1` times the
/// split's digits.
pub fn separate_ties(values: &[f64]) -> (Vec<f64>, bool) {
    let groups = group_values(values, SNAP_TOL);
    if groups.counts.iter().all(|&c| c == 1) {
        return (values.to_vec(), false);
    }
    let mut out = Vec::with_capacity(values.len());
    for (&v, &n) in groups.values.iter().zip(&groups.counts) {
        let h = if n <= 2 { 1e-6 } else { 1e-16f64.powf(1.0 / (n as f64 + 1.0)) };
        let mid = (n as f64 - 1.0) / 2.0;
        for i in 0..n {
            out.push(v * (1.0 + h * (i as f64 - mid)));
        }
    }
    (out, true)
}

/// Distance-averaged CCDF of a homogeneous network, shared by the link and
/// overall success results. `extra` is added inside the base of each term.
pub(crate) fn averaged_ccdf(
    model: &NetworkModel,
    geometry: &ClusterGeometry,
    q_tr: f64,
    theta: f64,
    extra: f64,
) -> Result<f64> {
    check_inputs(model, geometry, theta)?;
    if !(0.0..1.0).contains(&q_tr) {
        return Err(Error::invalid("q_tr", format!("{q_tr} is not in [0, 1)")));
    }
    let k = geometry.k();
    let (w, moved) = separate_ties(geometry.omega_eta());
    if moved {
        warn!("normalized cluster geometry {:?} has ties; separating them to use the distinct form", geometry.omega());
    }
    let alpha = alpha_coefficients(&w);
    let qk = q_tr.powi(k as i32);
    let d = 2.0 / model.eta;
    let tier_scale = if model.tiers.is_empty() {
        0.0
    } else {
        interference_constant(model.eta)? * model.relative_tier_load(1.0 - q_tr)
    };
    let mut total = 0.0;
    for (j, &wj) in w.iter().enumerate() {
        let num: f64 = alpha.iter().enumerate().map(|(i, a)| a * (q_tr.powi(i as i32) - qk) * wj.powi(i as i32)).sum();
        let den = wj * product_of_gaps(&w, j);
        let upsilon = if theta > 0.0 { wj.powf(d) * theta.powf(d) * tier_scale } else { 0.0 };
        let base = 1.0 + pathloss_functional(wj * theta, model.eta)? + upsilon + extra;
        total += num / den * base.powi(-(k as i32));
    }
    Ok(clamp_probability(total, "distance-averaged ccdf"))
}

/// Interference-limited CCDF averaged over `d_K`, for a normalized geometry
/// and a common idle probability `q_tr`. Noise is ignored.
pub fn link_ccdf_theorem2(model: &NetworkModel, geometry: &ClusterGeometry, q_tr: f64, theta: f64) -> Result<f64> {
    averaged_ccdf(model, geometry, q_tr, theta, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{sk_ccdf, TierConfig};
    use crate::geometry::InClusterAvailability;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn model(q: Vec<f64>) -> NetworkModel {
        NetworkModel {
            tx_intensity: 0.01,
            rx_intensity: 0.01,
            eta: 4.0,
            noise: 1e-10,
            out_cluster_tx_prob: 0.55,
            tiers: vec![TierConfig { intensity: 0.01, tx_prob: 0.53, power: 2.0 }],
            in_cluster: InClusterAvailability::new(q).unwrap(),
        }
    }

    #[test]
    fn theorem1_low_threshold_limit() {
        let g = ClusterGeometry::new(vec![5.0, 10.0, 10.0, 10.0], 4.0).unwrap();
        let mut m = model(vec![0.6, 0.55, 0.5, 0.45]);
        let g_prod = m.in_cluster.g();
        assert!((link_ccdf_theorem1(&m, &g, 0.0).unwrap() - (1.0 - g_prod)).abs() < 1e-12);
        // the extrinsic term vanishes only like θ^{2/η}
        let with_tiers = link_ccdf_theorem1(&m, &g, 1e-12).unwrap();
        assert!((with_tiers - (1.0 - g_prod)).abs() < 1e-5);
        m.tiers.clear();
        let v = link_ccdf_theorem1(&m, &g, 1e-12).unwrap();
        assert!((v - (1.0 - g_prod)).abs() < 1e-6);
    }

    #[test]
    fn theorem1_matches_prop1_when_distinct() {
        let g = ClusterGeometry::new(vec![10.0, 12.0, 14.0, 16.0], 4.0).unwrap();
        let m = model(vec![0.6, 0.55, 0.5, 0.45]);
        for &t in &[0.0, 0.01, 0.1, 1.0, 10.0] {
            let a = link_ccdf_theorem1(&m, &g, t).unwrap();
            let b = link_ccdf_prop1(&m, &g, t).unwrap();
            assert!((a - b).abs() < 1e-12, "theta={t}: {a} vs {b}");
        }
    }

    #[test]
    fn prop1_rejects_repeats() {
        let g = ClusterGeometry::new(vec![5.0, 10.0, 10.0], 4.0).unwrap();
        assert!(matches!(link_ccdf_prop1(&model(vec![0.5; 3]), &g, 1.0), Err(Error::NotDistinct(_))));
    }

    #[test]
    fn prop1_single_node_reduction() {
        let d: f64 = 7.0;
        let g = ClusterGeometry::new(vec![d], 4.0).unwrap();
        let m = model(vec![0.3]);
        let theta: f64 = 0.8;
        let lam_hat = 0.55 * 0.01;
        let noise = (-d.powi(4) * theta * m.noise).exp();
        let intr = (-PI * lam_hat * d * d * pathloss_functional(theta, 4.0).unwrap()).exp();
        // Γ(1.5)Γ(0.5) = π/2
        let extr = (-PI * 0.53 * 0.01 * d * d * (theta * 2.0).sqrt() * PI / 2.0).exp();
        let hand = 0.7 * noise * intr * extr;
        assert!((link_ccdf_prop1(&m, &g, theta).unwrap() - hand).abs() < 1e-14);
    }

    #[test]
    fn prop1_is_expectation_of_sk() {
        // without interference or noise the CCDF is Pr[S_K > 0] for every θ
        let g = ClusterGeometry::new(vec![3.0, 4.0, 9.0], 3.5).unwrap();
        let mut m = model(vec![0.2, 0.4, 0.7]);
        m.eta = 3.5;
        m.tiers.clear();
        m.noise = 0.0;
        m.out_cluster_tx_prob = 0.0;
        let s0 = sk_ccdf(&g, &m.in_cluster, 0.0).unwrap();
        assert!((link_ccdf_prop1(&m, &g, 5.0).unwrap() - s0).abs() < 1e-12);
        // with only noise it is the S_K CCDF at θ d_K^η σ²
        m.noise = 1e-4;
        let theta = 0.5;
        let x = theta * 9f64.powf(3.5) * 1e-4;
        let s = sk_ccdf(&g, &m.in_cluster, x).unwrap();
        assert!((link_ccdf_prop1(&m, &g, theta).unwrap() - s).abs() < 1e-12);
    }

    #[test]
    fn uniform_idle_sum_form_matches_prop1() {
        let g = ClusterGeometry::new(vec![4.0, 6.0, 7.5], 4.0).unwrap();
        let q = 0.35;
        let m = model(vec![q; 3]);
        let w = g.omega_eta();
        let alpha = alpha_coefficients(w);
        let dk_eta = 7.5f64.powi(4);
        for &theta in &[0.0, 0.2, 2.0, 20.0] {
            let mut sum = 0.0;
            for (j, &wj) in w.iter().enumerate() {
                let num: f64 =
                    alpha.iter().enumerate().map(|(i, a)| a * (q.powi(i as i32) - q.powi(3)) * wj.powi(i as i32)).sum();
                sum += num / (wj * product_of_gaps(w, j)) * conditional_laplace(&m, 7.5, wj * dk_eta * theta).unwrap();
            }
            let p = link_ccdf_prop1(&m, &g, theta).unwrap();
            assert!((sum - p).abs() < 1e-12, "theta={theta}");
        }
    }

    #[test]
    fn theorem2_single_member_closed_form() {
        let mut m = model(vec![0.5]);
        m.tiers.clear();
        let g = ClusterGeometry::normalized(vec![1.0], 4.0).unwrap();
        for &q in &[0.0, 0.3, 0.9] {
            for &t in &[0.01, 1.0, 30.0] {
                let v = link_ccdf_theorem2(&m, &g, q, t).unwrap();
                let c = (1.0 - q) / (1.0 + pathloss_functional(t, 4.0).unwrap());
                assert!((v - c).abs() < 1e-12);
            }
        }
        let v = link_ccdf_theorem2(&m, &g, 0.0, 1.0).unwrap();
        assert!((v - 1.0 / (1.0 + PI / 4.0)).abs() < 1e-12);
        assert!((v - 0.56010).abs() < 1e-5);
    }

    #[test]
    fn theorem2_intensity_invariance() {
        let mut m = model(vec![0.5]);
        m.tiers.clear();
        let g = ClusterGeometry::normalized(vec![0.5, 1.0], 4.0).unwrap();
        let mut m2 = m.clone();
        m2.tx_intensity = 0.1;
        for &t in &[0.01, 0.5, 3.0, 100.0] {
            let a = link_ccdf_theorem2(&m, &g, 0.3, t).unwrap();
            let b = link_ccdf_theorem2(&m2, &g, 0.3, t).unwrap();
            assert!((a - b).abs() <= 1e-14);
        }
    }

    #[test]
    fn theorem2_tiers_reduce_success() {
        let g = ClusterGeometry::normalized(vec![0.5, 1.0], 4.0).unwrap();
        let mut m = model(vec![0.5]);
        m.tiers.clear();
        let off = link_ccdf_theorem2(&m, &g, 0.2, 1.0).unwrap();
        m.tiers.push(TierConfig { intensity: 0.05, tx_prob: 0.5, power: 2.0 });
        m.tx_intensity = 0.1;
        let on = link_ccdf_theorem2(&m, &g, 0.2, 1.0).unwrap();
        assert!(on < off);
    }

    #[test]
    fn theorem2_ties_are_continuous() {
        let mut m = model(vec![0.5]);
        m.tiers.clear();
        let tied = ClusterGeometry::normalized(vec![0.5, 1.0, 1.0], 4.0).unwrap();
        let near = ClusterGeometry::normalized(vec![0.5, 0.999, 1.0], 4.0).unwrap();
        let far = ClusterGeometry::normalized(vec![0.5, 0.99, 1.0], 4.0).unwrap();
        let a = link_ccdf_theorem2(&m, &tied, 0.4, 1.0).unwrap();
        let b = link_ccdf_theorem2(&m, &near, 0.4, 1.0).unwrap();
        let c = link_ccdf_theorem2(&m, &far, 0.4, 1.0).unwrap();
        assert!((a - b).abs() < (a - c).abs());
        assert!((a - b).abs() < 1e-3);
        let triple = ClusterGeometry::normalized(vec![1.0, 1.0, 1.0], 4.0).unwrap();
        let v = link_ccdf_theorem2(&m, &triple, 0.4, 0.0).unwrap();
        assert!((v - (1.0 - 0.4f64.powi(3))).abs() < 1e-6);
    }

    #[test]
    fn separate_ties_behaviour() {
        let (v, moved) = separate_ties(&[0.2, 0.5]);
        assert!(!moved);
        assert_eq!(v, vec![0.2, 0.5]);
        let (v, moved) = separate_ties(&[0.5, 1.0, 1.0]);
        assert!(moved);
        assert!((v[1] - (1.0 - 5e-7)).abs() < 1e-15 && (v[2] - (1.0 + 5e-7)).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn theorem1_equals_prop1_random(
            raw in prop::collection::vec(1.0f64..20.0, 1..=5),
            q in prop::collection::vec(0.0f64..0.9, 5),
            theta in 0.0f64..50.0,
        ) {
            let g = ClusterGeometry::new(raw, 4.0).unwrap();
            prop_assume!(g.multiplicities().values.windows(2).all(|w| w[1] / w[0] > 1.05));
            let m = model(q[..g.k()].to_vec());
            let a = link_ccdf_theorem1(&m, &g, theta).unwrap();
            let b = link_ccdf_prop1(&m, &g, theta).unwrap();
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }

        #[test]
        fn ccdfs_are_monotone(
            raw in prop::collection::vec(0.1f64..1.0, 1..=4),
            q in 0.0f64..0.9,
            t in 0.0f64..20.0,
            dt in 0.0f64..5.0,
        ) {
            let mut omega = raw.clone();
            let max = omega.iter().cloned().fold(0.0, f64::max);
            omega.iter_mut().for_each(|w| *w /= max);
            let g = ClusterGeometry::normalized(omega, 4.0).unwrap();
            prop_assume!(g.is_distinct(1e-3));
            let m = model(vec![q; g.k()]);
            let a = link_ccdf_theorem2(&m, &g, q, t).unwrap();
            let b = link_ccdf_theorem2(&m, &g, q, t + dt).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b <= a + 1e-12);
            let a1 = link_ccdf_prop1(&m, &g, t).unwrap();
            let b1 = link_ccdf_prop1(&m, &g, t + dt).unwrap();
            prop_assert!(b1 <= a1 + 1e-12);
        }
    }
}
