//! Closed-form eigensystem of the unperturbed drive on one orbit.

use std::f64::consts::TAU;

use faer::{c64, Mat};

use super::{fix_column_phases, QuasiSpectrum, SectorLabel};
use crate::basis::{BasisState, Orbit};
use crate::linalg::{cis, wrap_angle, ZERO};

/// One analytic eigenpair, stored sparsely on the orbit states.
#[derive(Clone, Debug, PartialEq)]
pub struct SolvableEigenpair {
    pub energy: f64,
    /// 1-based eigenvalue index within the orbit.
    pub j: usize,
    /// (basis index, amplitude).
    pub amplitudes: Vec<(usize, c64)>,
}

/// Eigenpairs of an orbit on which U|z_m⟩ = e^{−iφ_{m+1}}|z_{m+1}⟩.
///
/// `phases[m]` is the phase φ picked up on arriving at `orbit.states[m]`,
/// i.e. E_int(z_m)·t₃.
pub fn solvable_spectrum(orbit: &Orbit, phases: &[f64]) -> Vec<SolvableEigenpair> {
    let k = orbit.states.len();
    assert_eq!(phases.len(), k, "one phase per orbit state");
    let kf = k as f64;
    let mean = phases.iter().sum::<f64>() / kf;
    let theta: Vec<f64> = (1..=k)
        .map(|m| {
            (1..=k)
                .map(|i| ((m + k - i) % k) as f64 * phases[i - 1])
                .sum::<f64>()
                / kf
        })
        .collect();
    let norm = 1.0 / kf.sqrt();
    (1..=k)
        .map(|j| {
            let amplitudes = (1..=k)
                .map(|m| {
                    let angle = theta[m - 1] + (m * j) as f64 * TAU / kf;
                    (orbit.states[m - 1].index(), cis(angle) * norm)
                })
                .collect();
            SolvableEigenpair { energy: wrap_angle(mean + j as f64 * TAU / kf), j, amplitudes }
        })
        .collect()
}

/// Dense labelled spectrum assembled from the analytic eigenpairs of `orbits`.
pub fn solvable_quasi_spectrum(orbits: &[Orbit], phase_of: impl Fn(BasisState) -> f64, dim: usize) -> QuasiSpectrum {
    let mut pairs: Vec<(f64, SectorLabel, Vec<(usize, c64)>)> = Vec::new();
    for orbit in orbits {
        let phases: Vec<f64> = orbit.states.iter().map(|&z| phase_of(z)).collect();
        for p in solvable_spectrum(orbit, &phases) {
            let label = SectorLabel { sector: orbit.sector_id, j: p.j, period: orbit.period };
            pairs.push((p.energy, label, p.amplitudes));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.sector.cmp(&b.1.sector)).then(a.1.j.cmp(&b.1.j)));
    let mut vectors = Mat::from_fn(dim, pairs.len(), |_, _| ZERO);
    for (c, (_, _, amps)) in pairs.iter().enumerate() {
        for &(r, a) in amps {
            vectors[(r, c)] = a;
        }
    }
    fix_column_phases(&mut vectors);
    QuasiSpectrum {
        energies: pairs.iter().map(|p| p.0).collect(),
        vectors,
        labels: pairs.iter().map(|p| Some(p.1)).collect(),
    }
}
