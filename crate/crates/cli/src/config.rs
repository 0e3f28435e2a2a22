//! Experiment configuration: JSON schema, defaults, validation and presets.

use std::path::Path;

use coophx_core::{
    db_to_linear, dbm_to_linear, ClusterGeometry, ClusterSource, EnergyProfile, InClusterAvailability, NetworkModel,
    SimConfig, TierConfig, Window,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    LinkThm1,
    LinkProp1,
    LinkThm2,
    ClusterAccess,
    OverallSuccess,
    BufferSweep,
    RateSweep,
    BetaSweep,
    FigureRepro,
}

impl ExperimentKind {
    fn needs_geometries(self) -> bool {
        matches!(self, Self::LinkThm1 | Self::LinkProp1 | Self::LinkThm2 | Self::OverallSuccess)
    }

    fn needs_cluster_sizes(self) -> bool {
        matches!(self, Self::ClusterAccess | Self::BufferSweep | Self::RateSweep | Self::BetaSweep)
    }
}

pub const FIGURE_IDS: [&str; 7] = ["fig2", "fig3a", "fig3b", "fig4a", "fig4b", "fig5", "fig6"];

/// Activity of a transmitter: a fixed transmit probability or an energy profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum ActivitySpec {
    Profile { rho: f64, buffer_size: u32, p_ch: f64 },
    Fixed { tx_prob: f64 },
}

impl ActivitySpec {
    pub fn profile(&self) -> Option<EnergyProfile> {
        match *self {
            Self::Profile { rho, buffer_size, p_ch } => EnergyProfile::new(rho, buffer_size, p_ch).ok(),
            Self::Fixed { .. } => None,
        }
    }

    pub fn tx_prob(&self) -> Result<f64, CliError> {
        match *self {
            Self::Profile { rho, buffer_size, p_ch } => {
                Ok(EnergyProfile::new(rho, buffer_size, p_ch)?.transmission_probability()?)
            }
            Self::Fixed { tx_prob } => {
                if !(0.0..=1.0).contains(&tx_prob) {
                    return Err(CliError::invalid("tx_prob", format!("{tx_prob} is not in [0, 1]")));
                }
                Ok(tx_prob)
            }
        }
    }
}

/// One shared activity for every member, or one entry per member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InClusterSpec {
    Members(Vec<ActivitySpec>),
    Uniform(ActivitySpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub tx_intensity: f64,
    /// Defaults to `tx_intensity`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_intensity: Option<f64>,
    pub eta: f64,
    /// Noise power in dBm with unit transmit power taken as 1 W.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_dbm: Option<f64>,
    /// Linear noise power; takes precedence over `noise_dbm`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_linear: Option<f64>,
    pub out_cluster: ActivitySpec,
    #[serde(default)]
    pub tiers: Vec<TierConfig>,
    pub in_cluster: InClusterSpec,
}

impl ModelSpec {
    pub fn noise(&self) -> f64 {
        match (self.noise_linear, self.noise_dbm) {
            (Some(n), _) => n,
            (None, Some(dbm)) => dbm_to_linear(dbm),
            (None, None) => 0.0,
        }
    }

    fn member_activities(&self, k: usize) -> Result<Vec<ActivitySpec>, CliError> {
        match &self.in_cluster {
            InClusterSpec::Uniform(a) => Ok(vec![*a; k]),
            InClusterSpec::Members(m) => {
                if m.len() < k {
                    return Err(CliError::invalid(
                        "in_cluster",
                        format!("{} member activities for a cluster of {k}", m.len()),
                    ));
                }
                Ok(m[..k].to_vec())
            }
        }
    }

    /// Shared idle probability `q_tr`; errors when members differ.
    pub fn uniform_idle(&self) -> Result<f64, CliError> {
        match &self.in_cluster {
            InClusterSpec::Uniform(a) => Ok(1.0 - a.tx_prob()?),
            InClusterSpec::Members(m) => {
                let q: Vec<f64> = m.iter().map(|a| a.tx_prob().map(|p| 1.0 - p)).collect::<Result<_, _>>()?;
                match q.first() {
                    Some(&first) if q.iter().all(|&x| x == first) => Ok(first),
                    _ => Err(CliError::invalid("in_cluster", "this experiment needs identical cluster members")),
                }
            }
        }
    }

    /// Network model for a cluster of `k` members.
    pub fn build(&self, k: usize) -> Result<NetworkModel, CliError> {
        let acts = self.member_activities(k)?;
        let in_cluster = match acts.iter().map(ActivitySpec::profile).collect::<Option<Vec<_>>>() {
            Some(p) => InClusterAvailability::from_profiles(p)?,
            None => InClusterAvailability::new(
                acts.iter().map(|a| a.tx_prob().map(|p| 1.0 - p)).collect::<Result<_, _>>()?,
            )?,
        };
        let model = NetworkModel {
            tx_intensity: self.tx_intensity,
            rx_intensity: self.rx_intensity.unwrap_or(self.tx_intensity),
            eta: self.eta,
            noise: self.noise(),
            out_cluster_tx_prob: self.out_cluster.tx_prob()?,
            tiers: self.tiers.clone(),
            in_cluster,
        };
        model.validate()?;
        for t in &model.tiers {
            t.validate()?;
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum GeometrySpec {
    /// Absolute member distances.
    Distances(Vec<f64>),
    /// Distances normalized by the farthest member.
    Omega(Vec<f64>),
}

impl GeometrySpec {
    pub fn build(&self, eta: f64) -> Result<ClusterGeometry, CliError> {
        Ok(match self {
            Self::Distances(d) => ClusterGeometry::new(d.clone(), eta)?,
            Self::Omega(w) => ClusterGeometry::normalized(w.clone(), eta)?,
        })
    }

    pub fn k(&self) -> usize {
        match self {
            Self::Distances(v) | Self::Omega(v) => v.len(),
        }
    }
}

/// Explicit values or an inclusive arithmetic range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Self::Values(ref v) => v.clone(),
            Self::Range { start, stop, step } => {
                if !(step > 0.0) || stop < start {
                    return vec![];
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| start + step * i as f64).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buffer_size: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_radius: Option<f64>,
    #[serde(default = "default_source")]
    pub cluster_source: ClusterSource,
    /// Drive member activity with buffer chains instead of stationary draws.
    #[serde(default)]
    pub trajectories: bool,
    /// Run the simulator; analytic curves only when false.
    #[serde(default = "default_true")]
    pub enabled: bool,
}

fn default_trials() -> u64 {
    100_000
}

fn default_source() -> ClusterSource {
    ClusterSource::ThinnedProcess
}

fn default_true() -> bool {
    true
}

fn default_tolerance() -> f64 {
    0.02
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            seed: 0,
            window_radius: None,
            cluster_source: default_source(),
            trajectories: false,
            enabled: true,
        }
    }
}

impl SimSpec {
    pub fn config(&self, theta_grid: Vec<f64>) -> SimConfig {
        SimConfig {
            trials: self.trials,
            window: self.window_radius.map_or(Window::Auto, Window::Fixed),
            theta_grid,
            master_seed: self.seed,
            cluster_source: self.cluster_source,
            steady_state_indicators: !self.trajectories,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    /// One curve per geometry for the link and overall-success kinds.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub geometries: Vec<GeometrySpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cluster_sizes: Vec<usize>,
    /// SINR thresholds in dB.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_db: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub sim: SimSpec,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Output directory; `--out-dir` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl ExperimentSpec {
    pub fn theta_linear(&self) -> Vec<f64> {
        self.theta_db.as_ref().map(|g| g.values().into_iter().map(db_to_linear).collect()).unwrap_or_default()
    }

    pub fn model(&self) -> Result<&ModelSpec, CliError> {
        self.model.as_ref().ok_or_else(|| CliError::invalid("model", "required for this kind"))
    }

    /// Enforce every cross-field constraint and build each model once.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.kind == ExperimentKind::FigureRepro {
            return match &self.figure {
                Some(f) if FIGURE_IDS.contains(&f.as_str()) => Ok(()),
                Some(f) => {
                    Err(CliError::invalid("figure", format!("unknown figure id {f:?}; expected one of {FIGURE_IDS:?}")))
                }
                None => Err(CliError::invalid("figure", "figure_repro needs a figure id")),
            };
        }
        if let Some(f) = &self.figure {
            if !FIGURE_IDS.contains(&f.as_str()) {
                return Err(CliError::invalid(
                    "figure",
                    format!("unknown figure id {f:?}; expected one of {FIGURE_IDS:?}"),
                ));
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(CliError::invalid("tolerance", format!("{} must be non-negative", self.tolerance)));
        }
        if self.sim.trials == 0 {
            return Err(CliError::invalid("trials", "must be at least 1"));
        }
        if let Some(r) = self.sim.window_radius {
            if !(r > 0.0) {
                return Err(CliError::invalid("window_radius", format!("{r} must be positive")));
            }
        }
        let model = self.model()?;
        let kind = self.kind;
        if kind.needs_geometries() {
            if self.geometries.is_empty() {
                return Err(CliError::invalid("geometries", "need at least one cluster geometry"));
            }
            let thetas = self.theta_db.as_ref().map(GridSpec::values).unwrap_or_default();
            if thetas.is_empty() {
                return Err(CliError::invalid("theta_db", "threshold grid must be non-empty"));
            }
            for g in &self.geometries {
                let normalized = matches!(g, GeometrySpec::Omega(_));
                let wants_normalized = matches!(kind, ExperimentKind::LinkThm2 | ExperimentKind::OverallSuccess);
                if normalized != wants_normalized {
                    let need = if wants_normalized { "omega" } else { "distances" };
                    return Err(CliError::invalid(
                        "geometries",
                        format!("{kind:?} geometries must be given as {need}"),
                    ));
                }
                g.build(model.eta)?;
                model.build(g.k())?;
            }
            if wants_uniform(kind) {
                model.uniform_idle()?;
            }
        }
        if kind.needs_cluster_sizes() {
            if self.cluster_sizes.is_empty() || self.cluster_sizes.contains(&0) {
                return Err(CliError::invalid("cluster_sizes", "need at least one positive cluster size"));
            }
            model.build(1)?;
            if kind == ExperimentKind::BetaSweep
                && self.geometries.iter().any(|g| matches!(g, GeometrySpec::Distances(_)))
            {
                return Err(CliError::invalid("geometries", "beta sweep geometries must be given as omega"));
            }
        }
        let sweep = self.sweep.clone().unwrap_or_default();
        let nonempty = |g: &Option<GridSpec>, field: &str| -> Result<(), CliError> {
            match g.as_ref().map(GridSpec::values) {
                Some(v) if !v.is_empty() => Ok(()),
                _ => Err(CliError::invalid(field, "sweep grid must be non-empty")),
            }
        };
        match kind {
            ExperimentKind::ClusterAccess | ExperimentKind::BetaSweep => {
                nonempty(&sweep.beta, "sweep.beta")?;
                if sweep.beta.as_ref().unwrap().values().iter().any(|b| !(*b > 0.0)) {
                    return Err(CliError::invalid("sweep.beta", "density ratios must be positive"));
                }
                if kind == ExperimentKind::BetaSweep {
                    model.uniform_idle()?;
                    if self.theta_linear().len() > 1 {
                        return Err(CliError::invalid("theta_db", "a beta sweep takes at most one threshold"));
                    }
                }
            }
            ExperimentKind::BufferSweep | ExperimentKind::RateSweep => {
                if sweep.buffer_size.as_ref().map_or(true, |b| b.is_empty() || b.contains(&0)) {
                    return Err(CliError::invalid("sweep.buffer_size", "need at least one positive buffer size"));
                }
                if kind == ExperimentKind::RateSweep {
                    nonempty(&sweep.rho, "sweep.rho")?;
                }
                base_profile(model)?;
            }
            _ => {}
        }
        Ok(())
    }
}

fn wants_uniform(kind: ExperimentKind) -> bool {
    matches!(kind, ExperimentKind::LinkThm2 | ExperimentKind::OverallSuccess)
}

/// Harvesting profile shared by the cluster, for buffer and rate sweeps.
pub fn base_profile(model: &ModelSpec) -> Result<EnergyProfile, CliError> {
    let a = match &model.in_cluster {
        InClusterSpec::Uniform(a) => *a,
        InClusterSpec::Members(m) => *m.first().ok_or_else(|| CliError::invalid("in_cluster", "empty member list"))?,
    };
    a.profile().ok_or_else(|| {
        CliError::invalid("in_cluster", "buffer and rate sweeps need an energy profile (rho, buffer_size, p_ch)")
    })
}

/// 1-based line of the first occurrence of `"key"` in `source`.
fn locate(source: &str, field: &str) -> Option<usize> {
    let key = field.rsplit('.').next().unwrap_or(field);
    let needle = format!("\"{key}\"");
    source.lines().position(|l| l.contains(&needle)).map(|i| i + 1)
}

/// Parse and validate a configuration document.
pub fn parse_config(source: &str) -> Result<ExperimentSpec, CliError> {
    let spec: ExperimentSpec = serde_json::from_str(source).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    spec.validate().map_err(|e| match e {
        CliError::Invalid { field, reason, .. } => {
            let line = locate(source, &field);
            CliError::Invalid { field, reason, line }
        }
        other => other,
    })?;
    Ok(spec)
}

pub fn load_config(path: &Path) -> Result<ExperimentSpec, CliError> {
    let source = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&source)
}

/// The shipped configuration for a figure id.
pub fn preset(figure: &str) -> Result<ExperimentSpec, CliError> {
    let source = match figure {
        "fig2" => include_str!("../../../configs/fig2.json"),
        "fig3a" => include_str!("../../../configs/fig3a.json"),
        "fig3b" => include_str!("../../../configs/fig3b.json"),
        "fig4a" => include_str!("../../../configs/fig4a.json"),
        "fig4b" => include_str!("../../../configs/fig4b.json"),
        "fig5" => include_str!("../../../configs/fig5.json"),
        "fig6" => include_str!("../../../configs/fig6.json"),
        other => {
            return Err(CliError::invalid(
                "figure",
                format!("unknown figure id {other:?}; expected one of {FIGURE_IDS:?}"),
            ))
        }
    };
    parse_config(source)
}
