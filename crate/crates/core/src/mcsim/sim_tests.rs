use super::*;
use crate::analytic::{link_ccdf_theorem1, link_ccdf_theorem2, TierConfig};
use crate::energy::EnergyProfile;
use crate::geometry::{ClusterGeometry, InClusterAvailability};
use crate::NetworkModel;

fn model(q: &[f64]) -> NetworkModel {
    NetworkModel {
        tx_intensity: 0.01,
        rx_intensity: 0.005,
        eta: 4.0,
        noise: 0.0,
        out_cluster_tx_prob: 0.5,
        tiers: vec![],
        in_cluster: InClusterAvailability::new(q.to_vec()).unwrap(),
    }
}

fn sim(trials: u64, grid: &[f64], seed: u64) -> SimConfig {
    SimConfig { trials, theta_grid: grid.to_vec(), master_seed: seed, ..SimConfig::default() }
}

/// Every analytic value lies within the 99% interval widened by `slack`.
fn covered(est: &EmpiricalEstimate, analytic: &[f64], slack: f64) -> bool {
    analytic.iter().zip(est.ci_low.iter().zip(&est.ci_high)).all(|(a, (lo, hi))| *lo - slack <= *a && *a <= *hi + slack)
}

#[test]
fn deterministic_under_seed() {
    let m = model(&[0.3, 0.4]);
    let g = ClusterGeometry::new(vec![5.0, 8.0], 4.0).unwrap();
    let s = sim(3000, &[0.1, 1.0], 11);
    let a = simulate_link_ccdf(&m, &LinkScenario::Conditioned(g.clone()), &s).unwrap();
    let b = simulate_link_ccdf(&m, &LinkScenario::Conditioned(g.clone()), &s).unwrap();
    assert_eq!(a, b);
    let c = simulate_link_ccdf(&m, &LinkScenario::Conditioned(g), &SimConfig { master_seed: 12, ..s }).unwrap();
    assert_ne!(a.success_freq, c.success_freq);
}

#[test]
fn interference_free_link_reduces_to_availability() {
    let mut m = model(&[0.3, 0.6, 0.5]);
    m.out_cluster_tx_prob = 0.0;
    let g = ClusterGeometry::new(vec![3.0, 4.0, 9.0], 4.0).unwrap();
    let est = simulate_link_ccdf(&m, &LinkScenario::Conditioned(g), &sim(40_000, &[1e-12, 1e3], 3)).unwrap();
    let target = 1.0 - 0.3 * 0.6 * 0.5;
    assert!(covered(&est, &[target, target], 0.0), "{:?}", est.success_freq);
}

#[test]
fn conditioned_matches_closed_form() {
    let mut m = model(&[0.4, 0.5]);
    m.noise = 1e-6;
    m.tiers.push(TierConfig { intensity: 0.005, tx_prob: 0.5, power: 2.0 });
    let g = ClusterGeometry::new(vec![6.0, 10.0], 4.0).unwrap();
    let grid = [0.05, 0.3, 1.0, 4.0];
    let est = simulate_link_ccdf(&m, &LinkScenario::Conditioned(g.clone()), &sim(20_000, &grid, 5)).unwrap();
    let exact: Vec<f64> = grid.iter().map(|&t| link_ccdf_theorem1(&m, &g, t).unwrap()).collect();
    assert!(covered(&est, &exact, 2e-3), "{:?} vs {exact:?}", est.success_freq);
}

#[test]
fn averaged_matches_closed_form() {
    let m = model(&[0.5]);
    let omega = ClusterGeometry::normalized(vec![0.6, 1.0], 4.0).unwrap();
    let grid = [0.1, 1.0, 5.0];
    let q = 0.35;
    let s = sim(20_000, &grid, 8);
    let est = simulate_link_ccdf(&m, &LinkScenario::Averaged { omega: omega.clone(), q_tr: q }, &s).unwrap();
    let exact: Vec<f64> = grid.iter().map(|&t| link_ccdf_theorem2(&m, &omega, q, t).unwrap()).collect();
    assert!(covered(&est, &exact, 2e-3), "{:?} vs {exact:?}", est.success_freq);
}

#[test]
fn doubling_the_window_changes_little() {
    let m = model(&[0.4]);
    let g = ClusterGeometry::new(vec![10.0], 4.0).unwrap();
    let grid = [0.1, 1.0];
    let base = sim(20_000, &grid, 21);
    let a = simulate_link_ccdf(
        &m,
        &LinkScenario::Conditioned(g.clone()),
        &SimConfig { window: Window::Fixed(320.0), ..base.clone() },
    )
    .unwrap();
    let b = simulate_link_ccdf(&m, &LinkScenario::Conditioned(g), &SimConfig { window: Window::Fixed(640.0), ..base })
        .unwrap();
    for i in 0..grid.len() {
        let half = 0.5 * (a.ci_high[i] - a.ci_low[i]);
        assert!((a.success_freq[i] - b.success_freq[i]).abs() < half);
    }
}

#[test]
fn buffer_trajectories_hit_stationary_rate() {
    let p = EnergyProfile::new(0.75, 2, 0.8).unwrap();
    let mut m = model(&[0.5]);
    m.in_cluster = InClusterAvailability::from_profiles(vec![p]).unwrap();
    m.out_cluster_tx_prob = 0.0;
    let g = ClusterGeometry::new(vec![5.0], 4.0).unwrap();
    let s = SimConfig { steady_state_indicators: false, ..sim(1_000_000, &[], 2) };
    let est = simulate_link_ccdf(&m, &LinkScenario::Conditioned(g), &s).unwrap();
    let f = est.in_cluster_tx_freq.unwrap()[0];
    let p_tr = p.transmission_probability().unwrap();
    assert!((f - p_tr).abs() < 2e-3, "{f} vs {p_tr}");
}

#[test]
fn trajectories_need_profiles() {
    let m = model(&[0.5]);
    let g = ClusterGeometry::new(vec![5.0], 4.0).unwrap();
    let s = SimConfig { steady_state_indicators: false, ..sim(10, &[1.0], 2) };
    assert!(simulate_link_ccdf(&m, &LinkScenario::Conditioned(g), &s).is_err());
}

#[test]
fn access_sanity() {
    let mut m = model(&[0.5]);
    m.out_cluster_tx_prob = 1.0;
    m.rx_intensity = 1e-5;
    let a = simulate_cluster_access(&m, 1, &sim(2000, &[], 1)).unwrap();
    assert!(a.value > 0.97, "{}", a.value);
    m.rx_intensity = 0.01;
    let one = simulate_cluster_access(&m, 1, &sim(4000, &[], 1)).unwrap();
    let three = simulate_cluster_access(&m, 3, &sim(4000, &[], 1)).unwrap();
    // a larger set is shared by fewer receivers
    assert!(three.value > one.value, "{} {}", one.value, three.value);
    assert!(one.value > 0.4 && one.value < 0.8);
}

#[test]
fn joint_success_below_access() {
    let m = model(&[0.5]);
    let omega = ClusterGeometry::normalized(vec![0.7, 1.0], 4.0).unwrap();
    let est = simulate_overall_success(&m, &omega, 0.4, &sim(3000, &[1e-12, 1.0], 4)).unwrap();
    assert!(est.joint.success_freq[0] <= est.access.value);
    assert!(est.joint.success_freq[1] <= est.joint.success_freq[0]);
    let expect = est.access.value * (1.0 - 0.16);
    assert!((est.joint.success_freq[0] - expect).abs() < 0.03);
}
