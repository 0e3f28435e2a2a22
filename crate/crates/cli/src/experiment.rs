//! Experiment orchestration: analytic curves, simulation and comparison.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use coophx_core::analytic::{
    cluster_access_approx, cluster_access_series, link_ccdf_prop1, link_ccdf_theorem1, link_ccdf_theorem2,
    overall_success_at_beta, overall_success_theorem3, CLUSTER_ACCESS_MAX_TERMS,
};
use coophx_core::mcsim::{
    simulate_cluster_access, simulate_cluster_idle, simulate_link_ccdf, simulate_overall_success, LinkScenario,
};
use coophx_core::{ClusterGeometry, ClusterSource, EnergyProfile};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{base_profile, preset, ExperimentKind, ExperimentSpec, GeometrySpec, GridSpec};
use crate::output::{Cell, Table};
use crate::CliError;

/// Threshold standing in for `θ → 0` when a beta sweep gives none.
pub const VANISHING_THETA: f64 = 1e-12;

/// Version of the JSON summary layout.
pub const SUMMARY_SCHEMA: u32 = 1;

/// Command-line overrides applied on top of a configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOverrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub tolerance: Option<f64>,
    pub cluster_source: Option<ClusterSource>,
}

impl RunOverrides {
    pub fn apply(&self, spec: &mut ExperimentSpec) {
        if let Some(s) = self.seed {
            spec.sim.seed = s;
        }
        if let Some(t) = self.trials {
            spec.sim.trials = t;
        }
        if let Some(t) = self.tolerance {
            spec.tolerance = t;
        }
        if let Some(c) = self.cluster_source {
            spec.sim.cluster_source = c;
        }
    }
}

/// Replace a `figure_repro` spec by its preset, keeping its seed, trial count
/// and output directory. Other kinds pass through.
pub fn resolve(spec: &ExperimentSpec) -> Result<ExperimentSpec, CliError> {
    if spec.kind != ExperimentKind::FigureRepro {
        return Ok(spec.clone());
    }
    let figure = spec.figure.as_deref().ok_or_else(|| CliError::invalid("figure", "figure_repro needs a figure id"))?;
    let mut p = preset(figure)?;
    p.sim.seed = spec.sim.seed;
    p.sim.trials = spec.sim.trials;
    if spec.output.is_some() {
        p.output.clone_from(&spec.output);
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSummary {
    pub label: String,
    pub file: String,
    pub points: usize,
    /// Largest `|analytic − empirical|`; absent without a simulation.
    pub sup_gap: Option<f64>,
    /// Fraction of points whose analytic value lies in the 99% interval.
    pub ci_coverage: Option<f64>,
    pub seed: Option<u64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub extra: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub name: String,
    pub kind: ExperimentKind,
    pub figure: Option<String>,
    pub seed: u64,
    pub trials: u64,
    pub tolerance: f64,
    pub sup_gap: Option<f64>,
    pub ci_coverage: Option<f64>,
    pub pass: bool,
    pub wall_time_s: f64,
    pub curves: Vec<CurveSummary>,
    pub parameters: ExperimentSpec,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub summary: Summary,
    /// CSV file name and contents, one per curve.
    pub tables: Vec<(String, Table)>,
}

impl ComparisonReport {
    /// Write every table and `<name>.json` into `dir`, returning the paths written.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut paths = vec![];
        for (file, table) in &self.tables {
            let p = dir.join(file);
            table.write(&p)?;
            paths.push(p);
        }
        let p = dir.join(format!("{}.json", self.summary.name));
        let text = serde_json::to_string_pretty(&self.summary).expect("summary serializes") + "\n";
        std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        paths.push(p);
        Ok(paths)
    }
}

/// Empirical frequencies with their 99% intervals.
struct Empirical {
    value: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    seed: u64,
}

struct Curve {
    label: String,
    stem: String,
    keys: Vec<(&'static str, Vec<Cell>)>,
    analytic: Vec<f64>,
    empirical: Option<Empirical>,
    trailing: Vec<(&'static str, Vec<f64>)>,
    extra: Map<String, Value>,
}

impl Curve {
    fn new(label: String, stem: String, keys: Vec<(&'static str, Vec<Cell>)>, analytic: Vec<f64>) -> Self {
        Self { label, stem, keys, analytic, empirical: None, trailing: vec![], extra: Map::new() }
    }

    fn finish(self, tolerance: f64, comment: &str) -> (CurveSummary, Table) {
        let mut header: Vec<&str> = self.keys.iter().map(|(k, _)| *k).collect();
        header.push("analytic");
        if self.empirical.is_some() {
            header.extend(["empirical", "ci_low", "ci_high"]);
        }
        header.extend(self.trailing.iter().map(|(k, _)| *k));
        let mut table = Table::new(header);
        table.comment = Some(comment.to_string());
        for i in 0..self.analytic.len() {
            let mut row: Vec<Cell> = self.keys.iter().map(|(_, v)| v[i]).collect();
            row.push(self.analytic[i].into());
            if let Some(e) = &self.empirical {
                row.extend([e.value[i], e.lo[i], e.hi[i]].map(Cell::Real));
            }
            row.extend(self.trailing.iter().map(|(_, v)| Cell::from(v[i])));
            table.push(row);
        }
        let (sup_gap, ci_coverage) = match &self.empirical {
            Some(e) => {
                let gap = self.analytic.iter().zip(&e.value).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                let inside =
                    (0..e.value.len()).filter(|&i| e.lo[i] <= self.analytic[i] && self.analytic[i] <= e.hi[i]).count();
                (Some(gap), Some(inside as f64 / e.value.len().max(1) as f64))
            }
            None => (None, None),
        };
        let summary = CurveSummary {
            label: self.label,
            file: format!("{}.csv", self.stem),
            points: self.analytic.len(),
            sup_gap,
            ci_coverage,
            seed: self.empirical.as_ref().map(|e| e.seed),
            pass: sup_gap.map_or(true, |g| g <= tolerance),
            extra: self.extra,
        };
        (summary, table)
    }
}

fn curve_seed(master: u64, index: usize) -> u64 {
    master.wrapping_add(index as u64)
}

fn grid(g: &Option<GridSpec>) -> Vec<f64> {
    g.as_ref().map(GridSpec::values).unwrap_or_default()
}

fn reals(v: &[f64]) -> Vec<Cell> {
    v.iter().map(|&x| Cell::Real(x)).collect()
}

fn link_curves(spec: &ExperimentSpec) -> Result<Vec<Curve>, CliError> {
    let ms = spec.model()?;
    let theta_db = grid(&spec.theta_db);
    let theta = spec.theta_linear();
    let mut seen = HashSet::new();
    let mut curves = vec![];
    for (i, g) in spec.geometries.iter().enumerate() {
        let k = g.k();
        let model = ms.build(k)?;
        let geom = g.build(model.eta)?;
        let stem = if seen.insert(k) { format!("{}_k{k}", spec.name) } else { format!("{}_k{k}_{}", spec.name, i + 1) };
        let q = match spec.kind {
            ExperimentKind::LinkThm2 | ExperimentKind::OverallSuccess => Some(ms.uniform_idle()?),
            _ => None,
        };
        let analytic = theta
            .iter()
            .map(|&t| match spec.kind {
                ExperimentKind::LinkThm1 => link_ccdf_theorem1(&model, &geom, t),
                ExperimentKind::LinkProp1 => link_ccdf_prop1(&model, &geom, t),
                ExperimentKind::LinkThm2 => link_ccdf_theorem2(&model, &geom, q.unwrap(), t),
                _ => overall_success_theorem3(&model, &geom, q.unwrap(), t),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut curve = Curve::new(format!("K={k}"), stem, vec![("theta", reals(&theta_db))], analytic);
        if spec.sim.enabled {
            let seed = curve_seed(spec.sim.seed, i);
            let mut sim = spec.sim.config(theta.clone());
            sim.master_seed = seed;
            let est = match spec.kind {
                ExperimentKind::OverallSuccess => {
                    let o = simulate_overall_success(&model, &geom, q.unwrap(), &sim)?;
                    let beta = (1.0 - q.unwrap()) * model.tx_intensity / model.rx_intensity;
                    curve.extra.insert("beta".into(), json!(beta));
                    curve.extra.insert("access_analytic".into(), json!(cluster_access_approx(k, beta)?));
                    curve.extra.insert("access_empirical".into(), json!(o.access.value));
                    o.joint
                }
                ExperimentKind::LinkThm2 => {
                    simulate_link_ccdf(&model, &LinkScenario::Averaged { omega: geom, q_tr: q.unwrap() }, &sim)?
                }
                _ => simulate_link_ccdf(&model, &LinkScenario::Conditioned(geom), &sim)?,
            };
            if let Some(f) = &est.in_cluster_tx_freq {
                curve.extra.insert("in_cluster_tx_freq".into(), json!(f));
            }
            curve.empirical = Some(Empirical { value: est.success_freq, lo: est.ci_low, hi: est.ci_high, seed });
        }
        curves.push(curve);
    }
    Ok(curves)
}

fn access_curves(spec: &ExperimentSpec) -> Result<Vec<Curve>, CliError> {
    let base = spec.model()?.build(1)?;
    let betas = grid(&spec.sweep.as_ref().and_then(|s| s.beta.clone()));
    let mut curves = vec![];
    for (ki, &k) in spec.cluster_sizes.iter().enumerate() {
        let analytic = betas.iter().map(|&b| cluster_access_approx(k, b)).collect::<Result<Vec<_>, _>>()?;
        let mut curve =
            Curve::new(format!("K={k}"), format!("{}_k{k}", spec.name), vec![("beta", reals(&betas))], analytic);
        if k == 1 {
            let series = betas
                .iter()
                .map(|&b| cluster_access_series(b, CLUSTER_ACCESS_MAX_TERMS))
                .collect::<Result<Vec<_>, _>>()?;
            curve.trailing.push(("series", series));
        }
        if spec.sim.enabled {
            let seed = curve_seed(spec.sim.seed, 1000 * ki);
            let mut emp = Empirical { value: vec![], lo: vec![], hi: vec![], seed };
            for (j, &beta) in betas.iter().enumerate() {
                let mut model = base.clone();
                model.rx_intensity = model.out_cluster_tx_prob * model.tx_intensity / beta;
                let mut sim = spec.sim.config(vec![]);
                sim.master_seed = seed.wrapping_add(j as u64);
                let est = simulate_cluster_access(&model, k, &sim)?;
                emp.value.push(est.value);
                emp.lo.push(est.ci_low);
                emp.hi.push(est.ci_high);
            }
            if let Some((_, series)) = curve.trailing.first() {
                let gap = series.iter().zip(&emp.value).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                curve.extra.insert("series_sup_gap".into(), json!(gap));
            }
            curve.empirical = Some(emp);
        }
        curves.push(curve);
    }
    Ok(curves)
}

/// Rows of `(profile, K)` for the energy sweeps: the asymptotic outage
/// `(1 − p_tr)^K`, its simulated counterpart and the infinite-buffer floor.
fn outage_curve(
    spec: &ExperimentSpec,
    keys: Vec<(&'static str, Vec<Cell>)>,
    cases: &[(EnergyProfile, usize)],
) -> Result<Curve, CliError> {
    let analytic = cases
        .iter()
        .map(|&(p, k)| p.transmission_probability().map(|t| (1.0 - t).powi(k as i32)))
        .collect::<Result<Vec<_>, _>>()?;
    let floor = cases.iter().map(|&(p, k)| (1.0 - p.infinite_buffer_limit()).powi(k as i32)).collect();
    let mut curve = Curve::new("asymptotic outage".into(), spec.name.clone(), keys, analytic);
    curve.trailing.push(("floor", floor));
    if spec.sim.enabled {
        let seed = spec.sim.seed;
        let mut emp = Empirical { value: vec![], lo: vec![], hi: vec![], seed };
        for (j, &(p, k)) in cases.iter().enumerate() {
            let est = simulate_cluster_idle(&vec![p; k], spec.sim.trials, seed.wrapping_add(j as u64))?;
            emp.value.push(est.value);
            emp.lo.push(est.ci_low);
            emp.hi.push(est.ci_high);
        }
        curve.empirical = Some(emp);
    }
    Ok(curve)
}

fn buffer_sweep(spec: &ExperimentSpec) -> Result<Vec<Curve>, CliError> {
    let base = base_profile(spec.model()?)?;
    let sizes = spec.sweep.as_ref().and_then(|s| s.buffer_size.clone()).unwrap_or_default();
    let mut cases = vec![];
    let (mut s_col, mut k_col) = (vec![], vec![]);
    for &k in &spec.cluster_sizes {
        for &s in &sizes {
            cases.push((EnergyProfile::new(base.rho, s, base.p_ch)?, k));
            s_col.push(Cell::from(s));
            k_col.push(Cell::from(k));
        }
    }
    Ok(vec![outage_curve(spec, vec![("buffer_size", s_col), ("k", k_col)], &cases)?])
}

fn rate_sweep(spec: &ExperimentSpec) -> Result<Vec<Curve>, CliError> {
    let base = base_profile(spec.model()?)?;
    let sweep = spec.sweep.clone().unwrap_or_default();
    let rhos = grid(&sweep.rho);
    let sizes = sweep.buffer_size.unwrap_or_default();
    let mut cases = vec![];
    let (mut r_col, mut s_col, mut k_col) = (vec![], vec![], vec![]);
    for &k in &spec.cluster_sizes {
        for &s in &sizes {
            for &rho in &rhos {
                cases.push((EnergyProfile::new(rho, s, base.p_ch)?, k));
                r_col.push(Cell::Real(rho));
                s_col.push(Cell::from(s));
                k_col.push(Cell::from(k));
            }
        }
    }
    Ok(vec![outage_curve(spec, vec![("rho", r_col), ("buffer_size", s_col), ("k", k_col)], &cases)?])
}

/// Normalized distances of a cluster of `k` when none is configured: the
/// median positions of the `K` nearest points, `ω_i = √(i/K)`.
pub fn default_omega(k: usize) -> Vec<f64> {
    (1..=k).map(|i| (i as f64 / k as f64).sqrt()).collect()
}

/// Wide table of the overall success probability per cluster size against
/// `β`, with the maximizing cluster size. Analytic only.
fn beta_sweep(spec: &ExperimentSpec) -> Result<(CurveSummary, Table), CliError> {
    let ms = spec.model()?;
    let model = ms.build(1)?;
    let q = ms.uniform_idle()?;
    let theta = spec.theta_linear().first().copied().unwrap_or(VANISHING_THETA);
    let betas = grid(&spec.sweep.as_ref().and_then(|s| s.beta.clone()));
    let geoms = spec
        .cluster_sizes
        .iter()
        .map(|&k| {
            let omega = spec
                .geometries
                .iter()
                .find_map(|g| match g {
                    GeometrySpec::Omega(w) if w.len() == k => Some(w.clone()),
                    _ => None,
                })
                .unwrap_or_else(|| default_omega(k));
            ClusterGeometry::normalized(omega, model.eta)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut header = vec!["beta".to_string()];
    header.extend(spec.cluster_sizes.iter().map(|k| format!("k{k}")));
    header.push("argmax".into());
    let mut table = Table::new(header);
    table.comment = Some(comment(spec));
    let mut argmax = vec![];
    for &beta in &betas {
        let vals =
            geoms.iter().map(|g| overall_success_at_beta(&model, g, q, beta, theta)).collect::<Result<Vec<_>, _>>()?;
        let best = vals.iter().enumerate().fold(0, |b, (i, v)| if *v > vals[b] { i } else { b });
        let k_best = spec.cluster_sizes[best];
        argmax.push(k_best);
        let mut row = vec![Cell::Real(beta)];
        row.extend(vals.into_iter().map(Cell::Real));
        row.push(Cell::from(k_best));
        table.push(row);
    }
    let mut extra = Map::new();
    extra.insert("theta".into(), json!(theta));
    extra.insert("argmax_nondecreasing".into(), json!(argmax.windows(2).all(|w| w[1] >= w[0])));
    if let (Some(first), Some(last)) = (argmax.first(), argmax.last()) {
        extra.insert("argmax_first".into(), json!(first));
        extra.insert("argmax_last".into(), json!(last));
    }
    let summary = CurveSummary {
        label: "overall success vs beta".into(),
        file: format!("{}.csv", spec.name),
        points: betas.len(),
        sup_gap: None,
        ci_coverage: None,
        seed: None,
        pass: true,
        extra,
    };
    Ok((summary, table))
}

/// The comment line heading each CSV: master seed and compact parameter echo.
fn comment(spec: &ExperimentSpec) -> String {
    format!(
        "coophx {} seed={} params={}",
        spec.name,
        spec.sim.seed,
        serde_json::to_string(spec).expect("spec serializes")
    )
}

/// Evaluate the analytic curves and run the simulator for a validated spec.
pub fn compute_experiment(spec: &ExperimentSpec) -> Result<ComparisonReport, CliError> {
    let spec = resolve(spec)?;
    spec.validate()?;
    let start = Instant::now();
    let header = comment(&spec);
    let finished: Vec<(CurveSummary, Table)> = match spec.kind {
        ExperimentKind::BetaSweep => vec![beta_sweep(&spec)?],
        kind => {
            let curves = match kind {
                ExperimentKind::ClusterAccess => access_curves(&spec)?,
                ExperimentKind::BufferSweep => buffer_sweep(&spec)?,
                ExperimentKind::RateSweep => rate_sweep(&spec)?,
                _ => link_curves(&spec)?,
            };
            curves.into_iter().map(|c| c.finish(spec.tolerance, &header)).collect()
        }
    };
    let (curves, tables): (Vec<_>, Vec<_>) = finished.into_iter().map(|(s, t)| ((s.clone()), (s.file, t))).unzip();
    let sup_gap = curves.iter().filter_map(|c| c.sup_gap).reduce(f64::max);
    let (inside, total) = curves
        .iter()
        .filter_map(|c| c.ci_coverage.map(|f| (f * c.points as f64, c.points)))
        .fold((0.0, 0usize), |a, b| (a.0 + b.0, a.1 + b.1));
    let summary = Summary {
        schema: SUMMARY_SCHEMA,
        name: spec.name.clone(),
        kind: spec.kind,
        figure: spec.figure.clone(),
        seed: spec.sim.seed,
        trials: spec.sim.trials,
        tolerance: spec.tolerance,
        sup_gap,
        ci_coverage: (total > 0).then(|| inside / total as f64),
        pass: curves.iter().all(|c| c.pass),
        wall_time_s: start.elapsed().as_secs_f64(),
        curves,
        parameters: spec,
    };
    Ok(ComparisonReport { summary, tables })
}

/// Run `spec` and write its CSV files and JSON summary into `out_dir`.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path) -> Result<ComparisonReport, CliError> {
    let report = compute_experiment(spec)?;
    report.write(out_dir)?;
    Ok(report)
}
