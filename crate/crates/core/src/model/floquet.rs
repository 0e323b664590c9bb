//! One-period Floquet unitaries.

use std::f64::consts::FRAC_PI_2;

use faer::c64;
use serde::{Deserialize, Serialize};

use super::hamiltonian::{interaction_unitary, swap_layers};
use super::{Boundary, DisorderRealization, DriveMode, ModelConfig};
use crate::error::{Error, Result};
use crate::linalg::{unitarity_error, CMat};

/// Provenance carried with a Floquet operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationSummary {
    pub seed: u64,
    pub sample: u64,
    pub eps1: f64,
    pub eps2: f64,
}

/// Dense one-period evolution operator.
#[derive(Clone, Debug)]
pub struct FloquetOperator {
    pub matrix: CMat,
    pub config: ModelConfig,
    pub summary: RealizationSummary,
}

impl FloquetOperator {
    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// max |(U†U − 1)_{ab}|.
    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(self.matrix.as_ref())
    }
}

fn summary(config: &ModelConfig, r: &DisorderRealization) -> RealizationSummary {
    RealizationSummary { seed: r.seed, sample: r.sample, eps1: config.eps1(), eps2: config.eps2() }
}

fn check_sites(config: &ModelConfig, r: &DisorderRealization) -> Result<()> {
    config.validate()?;
    if r.sites != config.sites {
        return Err(Error::Config(format!(
            "realization has {} sites but the model has {}",
            r.sites, config.sites
        )));
    }
    Ok(())
}

/// U_F = e^{−iH_int t₃} e^{−iH₂t₂} e^{−iH₁t₁}, or the kicked Ising operator.
pub fn build_floquet(config: &ModelConfig, r: &DisorderRealization) -> Result<FloquetOperator> {
    if config.drive == DriveMode::KickedIsing {
        return build_kicked_ising(config, r);
    }
    check_sites(config, r)?;
    let (l1, l2) = swap_layers(config)?;
    let dim = config.dimension();
    let mut u = CMat::identity(dim, dim);
    l1.apply_left(&mut u);
    l2.apply_left(&mut u);
    let u = interaction_unitary(r, config.t3)?.apply_left(&u);
    Ok(FloquetOperator { matrix: u, config: config.clone(), summary: summary(config, r) })
}

/// Kicked Ising chain: nearest-neighbour Ising evolution for t₃, then the
/// kick (π/2 − ε₁) Σ σ^x for unit time.
pub fn build_kicked_ising(config: &ModelConfig, r: &DisorderRealization) -> Result<FloquetOperator> {
    if config.drive != DriveMode::KickedIsing {
        return Err(Error::Config("expected the kicked Ising drive".into()));
    }
    check_sites(config, r)?;
    let l = config.sites;
    let mut nn = r.clone();
    for i in 0..l {
        for j in 0..l {
            let d = i.abs_diff(j);
            let neighbour = d == 1 || (config.boundary == Boundary::Periodic && d == l - 1 && l > 2);
            if !neighbour {
                nn.couplings[i * l + j] = 0.0;
            }
        }
    }
    let dim = config.dimension();
    let u = interaction_unitary(&nn, config.t3)?.apply_left(&CMat::identity(dim, dim));
    let theta = FRAC_PI_2 - config.eps1();
    let (stay, flip) = (c64::new(theta.cos(), 0.0), c64::new(0.0, -theta.sin()));
    let mut u = u;
    for site in 0..l {
        let m = 1usize << site;
        for col in 0..dim {
            let mut c = u.col_mut(col);
            for z in (0..dim).filter(|z| z & m == 0) {
                let (x, y) = (c[z], c[z | m]);
                c[z] = stay * x + flip * y;
                c[z | m] = flip * x + stay * y;
            }
        }
    }
    Ok(FloquetOperator { matrix: u, config: config.clone(), summary: summary(config, r) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{permutation_network, BasisState, PermutationMode};
    use crate::linalg::{expm_hermitian, max_abs_diff};
    use crate::model::{build_h_int, sample_disorder};

    #[test]
    fn unitary_for_all_drives() {
        for config in [
            ModelConfig::tuple(4, 8, 0.05),
            ModelConfig::tuple(3, 6, 0.05),
            ModelConfig::transition(2, 4, 0.6, 8, 0.02),
            ModelConfig::kicked_ising(6, 0.02),
        ] {
            let r = sample_disorder(&config, 3, 0);
            let u = build_floquet(&config, &r).unwrap();
            assert!(u.unitarity_error() < 1e-10);
        }
    }

    #[test]
    fn unperturbed_matrix_is_monomial_permutation() {
        let config = ModelConfig::tuple(4, 8, 0.0);
        let r = sample_disorder(&config, 7, 0);
        let u = build_floquet(&config, &r).unwrap().matrix;
        let net = permutation_network(PermutationMode::Tuple(4), 8).unwrap();
        for col in 0..256 {
            let target = net.apply_bits(col as u64) as usize;
            for row in 0..256 {
                let a = u[(row, col)].norm();
                if row == target {
                    assert!((a - 1.0).abs() < 1e-12);
                } else {
                    assert!(a < 1e-12);
                }
            }
        }
    }

    #[test]
    fn matches_product_of_segment_exponentials() {
        let config = ModelConfig::tuple(2, 4, 0.1);
        let r = sample_disorder(&config, 2, 0);
        let (l1, l2) = swap_layers(&config).unwrap();
        let u1 = expm_hermitian(l1.hamiltonian().as_ref(), config.t1).unwrap();
        let u2 = expm_hermitian(l2.hamiltonian().as_ref(), config.t2).unwrap();
        let ui = expm_hermitian(build_h_int(&r).as_ref(), config.t3).unwrap();
        let expect = &ui * &(&u2 * &u1);
        let got = build_floquet(&config, &r).unwrap().matrix;
        assert!(max_abs_diff(expect.as_ref(), got.as_ref()) < 1e-10);
    }

    #[test]
    fn kick_flips_every_spin() {
        let config = ModelConfig::kicked_ising(2, 0.0);
        let r = sample_disorder(&config, 1, 0);
        let u = build_floquet(&config, &r).unwrap().matrix;
        assert!((u[(0b11, 0b00)].norm() - 1.0).abs() < 1e-12);
        for l in [4, 6] {
            let config = ModelConfig::kicked_ising(l, 0.0);
            let r = sample_disorder(&config, 5, 1);
            let u = build_floquet(&config, &r).unwrap().matrix;
            for z in 0..(1usize << l) {
                let zbar = BasisState::new(z as u64, l).unwrap().complement().index();
                assert!((u[(zbar, z)].norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mismatched_realization_rejected() {
        let r = sample_disorder(&ModelConfig::tuple(2, 4, 0.0), 1, 0);
        assert!(build_floquet(&ModelConfig::tuple(2, 6, 0.0), &r).is_err());
    }
}
