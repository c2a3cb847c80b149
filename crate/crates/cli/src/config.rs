//! Experiment configuration, read from TOML. Every table and field is
//! optional; missing values fall back to the desk-scale defaults below.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub network: NetworkConfig,
    pub objective: ObjectiveConfig,
    pub run: RunConfig,
    pub design: DesignConfig,
    pub compare: CompareConfig,
    pub sdp: SdpConfig,
    pub feasibility: FeasibilityConfig,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Complete,
    Ring,
    Star,
    Random,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub kind: TopologyKind,
    pub n: usize,
    pub edge_prob: f64,
    pub seed: u64,
    /// Maximum number of enumerated paths; coverage is preserved when capping.
    pub path_cap: Option<usize>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            kind: TopologyKind::Complete,
            n: 200,
            edge_prob: 0.3,
            seed: 0,
            path_cap: Some(100_000),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `a/2 (x - c)^2 + log(1 + exp(b (x - d)))` with random coefficients.
    Apl1,
    /// `a/2 (x - c)^2` with `a = 1` and random centers in `[-15, 15]`.
    Quadratic,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveConfig {
    pub family: Family,
    pub seed: u64,
    /// Lower end of the curvature draw for `apl1`.
    pub min_curvature: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            family: Family::Apl1,
            seed: 1,
            min_curvature: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DistKind {
    Uniform,
    InverseLipschitz,
    LipschitzPower,
    DesignedLambda2,
    DesignedSigma,
    File,
}

impl DistKind {
    pub fn name(self) -> &'static str {
        match self {
            DistKind::Uniform => "uniform",
            DistKind::InverseLipschitz => "inverse_lipschitz",
            DistKind::LipschitzPower => "lipschitz_power",
            DistKind::DesignedLambda2 => "designed_lambda2",
            DistKind::DesignedSigma => "designed_sigma",
            DistKind::File => "file",
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub taus: Vec<usize>,
    pub distribution: DistKind,
    /// Exponent for `lipschitz_power`.
    pub alpha: f64,
    /// Source for `distribution = "file"`.
    pub distribution_file: Option<PathBuf>,
    pub seeds: usize,
    pub first_seed: u64,
    /// Iteration budget in units of `N`.
    pub budget_per_node: usize,
    pub trace_stride: Option<usize>,
    /// Iterations of the design ascent for the `designed_*` kinds.
    pub design_iters: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            taus: vec![2, 4, 7],
            distribution: DistKind::InverseLipschitz,
            alpha: 1.0,
            distribution_file: None,
            seeds: 20,
            first_seed: 0,
            budget_per_node: 200,
            trace_stride: None,
            design_iters: 500,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub tau: usize,
    pub iters: usize,
    pub step_scale: f64,
    /// Exponent of the Lipschitz-power candidate.
    pub alpha: f64,
    /// Also write the radius-bound SDP for external solvers.
    pub export_sdp: bool,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            tau: 2,
            iters: 500,
            step_scale: 1.0,
            alpha: 0.5,
            export_sdp: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub budget_per_node: usize,
    pub seeds: Option<usize>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        CompareConfig {
            budget_per_node: 200,
            seeds: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SdpChoice {
    RadiusBound,
    MaxLambda2,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SdpConfig {
    pub kind: SdpChoice,
    pub tau: usize,
    pub file: String,
}

impl Default for SdpConfig {
    fn default() -> Self {
        SdpConfig {
            kind: SdpChoice::RadiusBound,
            tau: 2,
            file: "design.dat-s".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetConfig {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Halfspace { a: Vec<f64>, b: f64 },
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FeasibilityConfig {
    pub v0: Vec<f64>,
    pub sets: Vec<SetConfig>,
    /// Node weights; uniform when absent.
    pub weights: Option<Vec<f64>>,
    /// Ball contained in every set, used for the dual radius bound.
    pub inner_center: Vec<f64>,
    pub inner_radius: f64,
    pub tau: usize,
    pub iters: usize,
    pub seeds: Option<usize>,
    pub loose_lipschitz: bool,
    /// Number of log-spaced trace points.
    pub trace_points: usize,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        let centers = [[0.2, 0.1], [-0.15, 0.2], [0.1, -0.25], [-0.2, -0.1], [0.25, 0.2]];
        FeasibilityConfig {
            v0: vec![4.0, 3.0],
            sets: centers
                .iter()
                .map(|c| SetConfig::Ball {
                    center: c.to_vec(),
                    radius: 1.0,
                })
                .collect(),
            weights: None,
            inner_center: vec![0.0, 0.0],
            inner_radius: 0.3,
            tau: 2,
            iters: 1000,
            seeds: None,
            loose_lipschitz: false,
            trace_points: 40,
        }
    }
}

impl Config {
    /// Parses TOML text; errors carry the offending line and field.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        let n = self.network.n;
        if n < 2 {
            return bad("network.n", format!("{n} nodes; at least 2 are required"));
        }
        if !(self.network.edge_prob > 0.0 && self.network.edge_prob <= 1.0) {
            return bad("network.edge_prob", format!("{} outside (0, 1]", self.network.edge_prob));
        }
        if self.run.taus.is_empty() {
            return bad("run.taus", "empty list".into());
        }
        for &t in &self.run.taus {
            if t < 2 || t > n {
                return bad("run.taus", format!("tau {t} outside [2, {n}]"));
            }
        }
        for (field, t) in [("design.tau", self.design.tau), ("sdp.tau", self.sdp.tau)] {
            if t < 2 || t > n {
                return bad(field, format!("tau {t} outside [2, {n}]"));
            }
        }
        if self.run.seeds == 0 {
            return bad("run.seeds", "need at least one seed".into());
        }
        if self.run.budget_per_node == 0 {
            return bad("run.budget_per_node", "must be positive".into());
        }
        if self.compare.budget_per_node == 0 {
            return bad("compare.budget_per_node", "must be positive".into());
        }
        if self.run.distribution == DistKind::File && self.run.distribution_file.is_none() {
            return bad("run.distribution_file", "required when distribution = \"file\"".into());
        }
        if self.objective.min_curvature < 0.0 || self.objective.min_curvature > 15.0 {
            return bad("objective.min_curvature", "must lie in [0, 15]".into());
        }
        if !self.sdp.file.ends_with(".dat-s") {
            return bad("sdp.file", format!("{:?} should end in .dat-s", self.sdp.file));
        }
        let f = &self.feasibility;
        if f.sets.len() < 2 {
            return bad("feasibility.sets", "need at least two sets".into());
        }
        if f.tau < 2 || f.tau > f.sets.len() {
            return bad("feasibility.tau", format!("tau {} outside [2, {}]", f.tau, f.sets.len()));
        }
        if f.inner_center.len() != f.v0.len() {
            return bad("feasibility.inner_center", "dimension differs from v0".into());
        }
        if !(f.inner_radius > 0.0) {
            return bad("feasibility.inner_radius", "must be positive".into());
        }
        if f.iters == 0 || f.trace_points < 2 {
            return bad("feasibility", "iters must be positive and trace_points >= 2".into());
        }
        Ok(())
    }

    /// Applies `--seeds` and `--tau` overrides.
    pub fn with_overrides(mut self, seeds: Option<usize>, tau: Option<usize>) -> Result<Self, CliError> {
        if let Some(s) = seeds {
            self.run.seeds = s;
            self.compare.seeds = Some(s);
            self.feasibility.seeds = Some(s);
        }
        if let Some(t) = tau {
            self.run.taus = vec![t];
            self.design.tau = t;
            self.sdp.tau = t;
        }
        self.validate()?;
        Ok(self)
    }
}
