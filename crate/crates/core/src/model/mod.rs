//! Model definitions: configuration, disorder, Hamiltonian segments and Floquet unitaries.

mod disorder;
mod floquet;
mod hamiltonian;

pub use disorder::{sample_disorder, DisorderRealization, SampleRng, Stream};
pub use floquet::{build_floquet, build_kicked_ising, FloquetOperator, RealizationSummary};
pub use hamiltonian::{
    build_h_int, build_swap_hamiltonians, build_transition_hamiltonians, interaction_diagonal,
    interaction_energy, interaction_unitary, swap_layers, SwapBond, SwapLayer,
};

use serde::{Deserialize, Serialize};

use crate::basis::{self, PermutationMode};
use crate::error::{Error, Result};

/// Largest chain for which dense 2^L × 2^L operators are built.
pub const DENSE_SITE_CAP: usize = 14;

/// Which drive protocol a model follows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DriveMode {
    /// n-tuple discrete time crystal.
    Tuple { n: usize },
    /// Interpolation between the n₁ and n₂ drives at weight `s`.
    Transition { n1: usize, n2: usize, s: f64 },
    /// Nearest-neighbour Ising chain with a global π-kick.
    KickedIsing,
}

impl DriveMode {
    /// Permutation skeleton of the drive, if any.
    pub fn permutation_mode(&self) -> Option<PermutationMode> {
        match *self {
            DriveMode::Tuple { n } => Some(PermutationMode::Tuple(n)),
            DriveMode::Transition { n1, n2, .. } => Some(PermutationMode::Transition { n1, n2 }),
            DriveMode::KickedIsing => None,
        }
    }

    /// Period probed by the subharmonic charges (n, n_G, or 2 for the kick).
    pub fn charge_period(&self) -> usize {
        match self.permutation_mode() {
            Some(mode) => mode.charge_period(),
            None => 2,
        }
    }
}

/// Boundary condition of the interaction graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// Model parameters. Field names double as keys of the TOML config schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Number of spins L.
    pub sites: usize,
    #[serde(flatten)]
    pub drive: DriveMode,
    /// Mean coupling J̄.
    #[serde(default = "defaults::coupling_mean")]
    pub coupling_mean: f64,
    /// Longitudinal field scale h̄^z.
    #[serde(default = "defaults::field_scale")]
    pub field_scale: f64,
    /// Power-law exponent κ.
    #[serde(default = "defaults::kappa")]
    pub kappa: f64,
    /// Perturbation strength λ.
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "defaults::half")]
    pub t1: f64,
    #[serde(default = "defaults::half")]
    pub t2: f64,
    #[serde(default = "defaults::one")]
    pub t3: f64,
    /// Uniform short-range couplings up to this distance instead of the power law.
    #[serde(default)]
    pub coupling_cutoff: Option<usize>,
    #[serde(default)]
    pub boundary: Boundary,
    /// ε₁ = eps1_ratio · λ.
    #[serde(default = "defaults::eps1_ratio")]
    pub eps1_ratio: f64,
    /// ε₂ = eps2_ratio · λ.
    #[serde(default = "defaults::eps2_ratio")]
    pub eps2_ratio: f64,
    /// Transverse amplitude ε^x = transverse_ratio · λ.
    #[serde(default = "defaults::one")]
    pub transverse_ratio: f64,
}

mod defaults {
    pub fn coupling_mean() -> f64 {
        4.0
    }
    pub fn field_scale() -> f64 {
        12.0
    }
    pub fn kappa() -> f64 {
        0.5
    }
    pub fn half() -> f64 {
        0.5
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn eps1_ratio() -> f64 {
        0.9
    }
    pub fn eps2_ratio() -> f64 {
        1.1
    }
}

impl ModelConfig {
    /// Default parameters for the n-tuple drive.
    pub fn tuple(n: usize, sites: usize, lambda: f64) -> Self {
        Self::with_drive(DriveMode::Tuple { n }, sites, lambda)
    }

    /// Default parameters for the n₁ → n₂ transition at weight `s`.
    pub fn transition(n1: usize, n2: usize, s: f64, sites: usize, lambda: f64) -> Self {
        Self::with_drive(DriveMode::Transition { n1, n2, s }, sites, lambda)
    }

    /// Default parameters for the kicked Ising chain.
    pub fn kicked_ising(sites: usize, lambda: f64) -> Self {
        Self::with_drive(DriveMode::KickedIsing, sites, lambda)
    }

    fn with_drive(drive: DriveMode, sites: usize, lambda: f64) -> Self {
        Self {
            sites,
            drive,
            coupling_mean: defaults::coupling_mean(),
            field_scale: defaults::field_scale(),
            kappa: defaults::kappa(),
            lambda,
            t1: 0.5,
            t2: 0.5,
            t3: 1.0,
            coupling_cutoff: None,
            boundary: Boundary::Open,
            eps1_ratio: defaults::eps1_ratio(),
            eps2_ratio: defaults::eps2_ratio(),
            transverse_ratio: 1.0,
        }
    }

    /// Same configuration at a different λ.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    /// Same configuration at a different transition weight.
    pub fn with_s(&self, s: f64) -> Self {
        let mut c = self.clone();
        if let DriveMode::Transition { s: ref mut old, .. } = c.drive {
            *old = s;
        }
        c
    }

    /// Same configuration on a different chain length.
    pub fn with_sites(&self, sites: usize) -> Self {
        Self { sites, ..self.clone() }
    }

    pub fn eps1(&self) -> f64 {
        self.eps1_ratio * self.lambda
    }

    pub fn eps2(&self) -> f64 {
        self.eps2_ratio * self.lambda
    }

    pub fn transverse_amplitude(&self) -> f64 {
        self.transverse_ratio * self.lambda
    }

    /// Hilbert-space dimension 2^L.
    pub fn dimension(&self) -> usize {
        1usize << self.sites
    }

    /// Checks ranges and divisibility.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.coupling_mean,
            self.field_scale,
            self.kappa,
            self.lambda,
            self.t1,
            self.t2,
            self.t3,
            self.eps1_ratio,
            self.eps2_ratio,
            self.transverse_ratio,
        ];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("non-finite model parameter".into()));
        }
        if self.sites < 1 {
            return Err(Error::Config("chain needs at least one site".into()));
        }
        if self.sites > DENSE_SITE_CAP {
            return Err(Error::Size(format!("{} sites exceed dense cap {DENSE_SITE_CAP}", self.sites)));
        }
        if self.t1 <= 0.0 || self.t2 <= 0.0 || self.t3 <= 0.0 {
            return Err(Error::Config("segment durations must be positive".into()));
        }
        if self.lambda < 0.0 {
            return Err(Error::Config("lambda must be non-negative".into()));
        }
        if self.kappa < 0.0 {
            return Err(Error::Config("kappa must be non-negative".into()));
        }
        if let DriveMode::Transition { s, .. } = self.drive {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::Config(format!("transition weight s = {s} outside [0, 1]")));
            }
        }
        if let Some(mode) = self.drive.permutation_mode() {
            basis::permutation_network(mode, self.sites)?;
            if let PermutationMode::Transition { n1, n2 } = mode {
                basis::permutation_network(PermutationMode::Tuple(n1), self.sites)?;
                basis::permutation_network(PermutationMode::Tuple(n2), self.sites)?;
            }
        } else if self.sites < 2 {
            return Err(Error::Config("kicked Ising chain needs at least two sites".into()));
        }
        Ok(())
    }

    /// Parses a TOML document.
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Serialises to TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }
}

/// Kac normalisation: 1 for κ > 1, ln L at κ = 1, L^{1−κ} for κ < 1.
pub fn kac_coefficient(sites: f64, kappa: f64) -> f64 {
    if kappa > 1.0 {
        1.0
    } else if kappa == 1.0 {
        sites.ln()
    } else {
        sites.powf(1.0 - kappa)
    }
}
