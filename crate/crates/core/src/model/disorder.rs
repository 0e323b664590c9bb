//! Seeded disorder realizations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{kac_coefficient, Boundary, ModelConfig};

/// Independent random streams per parameter family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Couplings = 1,
    Fields = 2,
    Transverse = 3,
    Auxiliary = 4,
}

/// Counter-based generator keyed by (master seed, sample index, stream).
///
/// Draws for one key never depend on which other keys were consumed, so
/// ensembles are reproducible in any execution order.
pub struct SampleRng;

impl SampleRng {
    pub fn new(master: u64, sample: u64, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(master, sample));
        rng.set_stream(stream as u64);
        rng
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(master: u64, sample: u64) -> u64 {
    splitmix(master ^ splitmix(sample.wrapping_add(0xA076_1D64_78BD_642F)))
}

/// One sampled set of couplings, fields and imperfections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub sites: usize,
    /// Row-major symmetric L × L table with zero diagonal.
    pub couplings: Vec<f64>,
    /// h_i^z.
    pub fields: Vec<f64>,
    /// ε_i^x.
    pub transverse: Vec<f64>,
    pub eps1: f64,
    pub eps2: f64,
    pub seed: u64,
    pub sample: u64,
}

impl DisorderRealization {
    /// J_ij.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.sites + j]
    }

    /// A realization with explicit parameters and no imperfections.
    pub fn from_parts(couplings: Vec<f64>, fields: Vec<f64>, transverse: Vec<f64>) -> Self {
        let sites = fields.len();
        assert_eq!(couplings.len(), sites * sites);
        assert_eq!(transverse.len(), sites);
        Self { sites, couplings, fields, transverse, eps1: 0.0, eps2: 0.0, seed: 0, sample: 0 }
    }

    /// JSON dump for provenance.
    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Site distance under the configured boundary condition.
pub(crate) fn site_distance(i: usize, j: usize, sites: usize, boundary: Boundary) -> usize {
    let d = i.abs_diff(j);
    match boundary {
        Boundary::Open => d,
        Boundary::Periodic => d.min(sites - d),
    }
}

/// Draws a realization for `(seed, sample)`.
///
/// Every parameter consumes one uniform variate regardless of λ, so two
/// configurations differing only in λ share the same J and h^z and have
/// proportional ε^x.
pub fn sample_disorder(config: &ModelConfig, seed: u64, sample: u64) -> DisorderRealization {
    let l = config.sites;
    let kac = kac_coefficient(l as f64, config.kappa);
    let mut rng = SampleRng::new(seed, sample, Stream::Couplings);
    let mut couplings = vec![0.0; l * l];
    for i in 0..l {
        for j in i + 1..l {
            let u: f64 = rng.random();
            let tilde = config.coupling_mean * (0.5 + u);
            let d = site_distance(i, j, l, config.boundary);
            let value = match config.coupling_cutoff {
                Some(cut) if d <= cut => tilde,
                Some(_) => 0.0,
                None => tilde / (kac * (d as f64).powf(config.kappa)),
            };
            couplings[i * l + j] = value;
            couplings[j * l + i] = value;
        }
    }
    let mut rng = SampleRng::new(seed, sample, Stream::Fields);
    let fields = (0..l).map(|_| 2.0 * config.field_scale * rng.random::<f64>()).collect();
    let mut rng = SampleRng::new(seed, sample, Stream::Transverse);
    let amp = config.transverse_amplitude();
    let transverse = (0..l).map(|_| amp * (2.0 * rng.random::<f64>() - 1.0)).collect();
    DisorderRealization {
        sites: l,
        couplings,
        fields,
        transverse,
        eps1: config.eps1(),
        eps2: config.eps2(),
        seed,
        sample,
    }
}
