//! Experiment specifications and sweep points.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DriveMode, ModelConfig};

/// Which analysis a run performs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    GapScaling,
    RCurve,
    Dynamics,
    UpttValidate,
    ChargeNorms,
    Collapse,
}

impl Analysis {
    pub fn name(&self) -> &'static str {
        match self {
            Analysis::GapScaling => "gap-scaling",
            Analysis::RCurve => "r-curve",
            Analysis::Dynamics => "dynamics",
            Analysis::UpttValidate => "uptt-validate",
            Analysis::ChargeNorms => "charge-norms",
            Analysis::Collapse => "collapse",
        }
    }
}

/// Sweep axes. An empty axis keeps the value from `[model]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default)]
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub s: Vec<f64>,
    #[serde(default)]
    pub sites: Vec<usize>,
}

/// Analysis-specific knobs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisOptions {
    /// Stroboscopic periods N_max for dynamics.
    #[serde(default = "defaults::periods")]
    pub periods: usize,
    /// Highest perturbative order for uptt-validate.
    #[serde(default = "defaults::max_order")]
    pub max_order: usize,
    /// Matrix dimension of the random uptt problems.
    #[serde(default = "defaults::problem_dim")]
    pub problem_dim: usize,
    /// Matched overlaps below this mark a sample as ambiguous.
    #[serde(default = "defaults::min_overlap")]
    pub min_overlap: f64,
    /// Amplitude threshold for the dynamically coupled subspace.
    #[serde(default = "defaults::coupling_tol")]
    pub coupling_tol: f64,
    /// Seed pattern of one unit for the r statistic, repeated along the chain.
    #[serde(default = "defaults::r_seed")]
    pub r_seed: String,
    /// s* search window for the collapse.
    #[serde(default = "defaults::s_star_window")]
    pub s_star_window: [f64; 2],
    /// ν search range for the collapse.
    #[serde(default = "defaults::nu_range")]
    pub nu_range: [f64; 2],
    #[serde(default = "defaults::grid_steps")]
    pub grid_steps: usize,
}

mod defaults {
    pub fn periods() -> usize {
        20000
    }
    pub fn max_order() -> usize {
        3
    }
    pub fn problem_dim() -> usize {
        8
    }
    pub fn min_overlap() -> f64 {
        0.5
    }
    pub fn coupling_tol() -> f64 {
        crate::spectral::DEFAULT_COUPLING_TOL
    }
    pub fn r_seed() -> String {
        "↓↑↑↑".into()
    }
    pub fn s_star_window() -> [f64; 2] {
        [0.0, 1.0]
    }
    pub fn nu_range() -> [f64; 2] {
        [0.2, 2.0]
    }
    pub fn grid_steps() -> usize {
        181
    }
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        toml::from_str("").expect("defaults deserialize")
    }
}

/// A complete experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub analysis: Analysis,
    /// Base model; required by every analysis except uptt-validate.
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub sweep: Sweep,
    /// Ensemble size per sweep point.
    #[serde(default = "one")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub options: AnalysisOptions,
}

fn one() -> usize {
    1
}

/// One point of the sweep grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub index: usize,
    /// Fully resolved model (a placeholder tuple model for uptt-validate).
    pub model: ModelConfig,
}

impl SweepPoint {
    pub fn lambda(&self) -> f64 {
        self.model.lambda
    }

    pub fn s(&self) -> Option<f64> {
        match self.model.drive {
            DriveMode::Transition { s, .. } => Some(s),
            _ => None,
        }
    }

    /// Directory name of this point.
    pub fn dir_name(&self) -> String {
        let mut name = format!("p{:03}_L{}_lam{}", self.index, self.model.sites, self.model.lambda);
        if let Some(s) = self.s() {
            name.push_str(&format!("_s{s}"));
        }
        name
    }
}

impl ExperimentSpec {
    /// Minimal spec for `analysis` on `model`.
    pub fn new(analysis: Analysis, model: Option<ModelConfig>) -> Self {
        Self {
            analysis,
            model,
            sweep: Sweep::default(),
            samples: 1,
            seed: 0,
            out: None,
            threads: None,
            options: AnalysisOptions::default(),
        }
    }

    /// Parses and validates a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    /// Checks ensemble size, axes and every resolved model.
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("ensemble size must be at least 1".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("thread count must be at least 1".into()));
        }
        if self.sweep.lambda.iter().chain(&self.sweep.s).any(|x| !x.is_finite()) {
            return Err(Error::Config("sweep values must be finite".into()));
        }
        let o = &self.options;
        if o.s_star_window[0] > o.s_star_window[1] || o.nu_range[0] <= 0.0 || o.nu_range[0] > o.nu_range[1] {
            return Err(Error::Config("collapse search ranges are inverted or non-positive".into()));
        }
        if o.grid_steps < 2 || o.max_order == 0 || o.problem_dim < 2 {
            return Err(Error::Config("grid_steps, max_order and problem_dim are too small".into()));
        }
        match self.analysis {
            Analysis::UpttValidate => {
                if self.sweep.lambda.iter().any(|&l| l <= 0.0) {
                    return Err(Error::Config("uptt-validate needs positive lambda values".into()));
                }
            }
            _ => {
                let model = self.model.as_ref().ok_or_else(|| {
                    Error::Config(format!("analysis {} needs a [model] table", self.analysis.name()))
                })?;
                if !self.sweep.s.is_empty() && !matches!(model.drive, DriveMode::Transition { .. }) {
                    return Err(Error::Config("an s sweep needs a transition model".into()));
                }
                if matches!(self.analysis, Analysis::RCurve | Analysis::Collapse)
                    && !matches!(model.drive, DriveMode::Transition { .. })
                {
                    return Err(Error::Config("r-curve and collapse need a transition model".into()));
                }
                if matches!(self.analysis, Analysis::Dynamics | Analysis::GapScaling)
                    && model.drive == DriveMode::KickedIsing
                {
                    return Err(Error::Config(format!(
                        "analysis {} needs a permutation drive",
                        self.analysis.name()
                    )));
                }
                for p in self.points()? {
                    p.model.validate()?;
                }
            }
        }
        Ok(())
    }

    /// λ values of the uptt-validate study.
    pub fn uptt_lambdas(&self) -> Vec<f64> {
        if self.sweep.lambda.is_empty() {
            vec![0.04, 0.02, 0.01]
        } else {
            self.sweep.lambda.clone()
        }
    }

    /// Cartesian product sites × λ × s in that nesting order.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        if self.analysis == Analysis::UpttValidate {
            let model = self.model.clone().unwrap_or_else(|| ModelConfig::tuple(2, 2, 0.0));
            return Ok(vec![SweepPoint { index: 0, model }]);
        }
        let base = self.model.as_ref().ok_or_else(|| Error::Config("missing [model] table".into()))?;
        let sites = if self.sweep.sites.is_empty() { vec![base.sites] } else { self.sweep.sites.clone() };
        let lambdas = if self.sweep.lambda.is_empty() { vec![base.lambda] } else { self.sweep.lambda.clone() };
        let ss: Vec<Option<f64>> = if self.sweep.s.is_empty() {
            vec![None]
        } else {
            self.sweep.s.iter().map(|&s| Some(s)).collect()
        };
        let mut out = Vec::new();
        for &l in &sites {
            for &lam in &lambdas {
                for s in &ss {
                    let mut model = base.with_sites(l).with_lambda(lam);
                    if let Some(s) = s {
                        model = model.with_s(*s);
                    }
                    out.push(SweepPoint { index: out.len(), model });
                }
            }
        }
        Ok(out)
    }
}
