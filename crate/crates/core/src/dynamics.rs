//! Stroboscopic evolution and subharmonic observables.

use std::f64::consts::TAU;
use std::io::Write;

use faer::linalg::matmul::matmul;
use faer::{c64, Accum, Mat, MatRef, Par};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::basis::BasisState;
use crate::charges::DiagonalObservable;
use crate::error::{Error, Result};
use crate::linalg::{cis, CMat, ONE, ZERO};
use crate::spectral::{diagonalize_unitary, QuasiSpectrum};

/// Largest tolerated |‖ψ‖² − 1| during evolution.
pub const NORM_DRIFT_TOL: f64 = 1e-6;

/// Initial states with |⟨Λ_j(0)⟩| below this are left out of the unit-j average.
pub const LAMBDA_FLOOR: f64 = 1e-12;

/// Stroboscopic expectations of diagonal charges from one initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: BasisState,
    /// Charge labels, in column order.
    pub labels: Vec<(usize, usize)>,
    /// `expectations[N][c]` = ⟨ψ(NT)|O_c|ψ(NT)⟩ for N = 0..=N_max.
    pub expectations: Vec<Vec<f64>>,
    /// Largest |‖ψ‖² − 1| seen.
    pub max_norm_drift: f64,
}

impl Trajectory {
    pub fn periods(&self) -> usize {
        self.expectations.len() - 1
    }
}

fn check_inputs(u: MatRef<'_, c64>, initials: &[BasisState], charges: &[DiagonalObservable]) -> Result<()> {
    let dim = u.nrows();
    if u.ncols() != dim {
        return Err(Error::Validation("evolution operator is not square".into()));
    }
    if let Some(z) = initials.iter().find(|z| z.index() >= dim || 1usize << z.len() != dim) {
        return Err(Error::Validation(format!("initial state {z} does not fit a {dim}-dimensional space")));
    }
    if charges.iter().any(|c| c.diag.len() != dim) {
        return Err(Error::Validation("charge dimension does not match the evolution operator".into()));
    }
    Ok(())
}

fn record(psi: MatRef<'_, c64>, charges: &[DiagonalObservable], out: &mut [Trajectory]) -> Result<()> {
    for (col, traj) in out.iter_mut().enumerate() {
        let probs: Vec<f64> = (0..psi.nrows()).map(|r| psi[(r, col)].norm_sqr()).collect();
        let drift = (probs.iter().sum::<f64>() - 1.0).abs();
        traj.max_norm_drift = traj.max_norm_drift.max(drift);
        if drift > NORM_DRIFT_TOL {
            return Err(Error::Numerical(format!(
                "norm drift {drift:e} after {} periods from {}",
                traj.expectations.len(),
                traj.initial
            )));
        }
        let row = charges.iter().map(|c| probs.iter().zip(&c.diag).map(|(p, d)| p * d).sum()).collect();
        traj.expectations.push(row);
    }
    Ok(())
}

/// Evolves one basis state for `n_max` periods.
pub fn evolve_stroboscopic(
    u: MatRef<'_, c64>,
    initial: BasisState,
    n_max: usize,
    charges: &[DiagonalObservable],
) -> Result<Trajectory> {
    Ok(evolve_batch(u, &[initial], n_max, charges)?.remove(0))
}

/// Evolves several basis states together, one dense matrix product per period.
pub fn evolve_batch(
    u: MatRef<'_, c64>,
    initials: &[BasisState],
    n_max: usize,
    charges: &[DiagonalObservable],
) -> Result<Vec<Trajectory>> {
    if n_max == 0 {
        return Err(Error::Config("at least one period is required".into()));
    }
    check_inputs(u, initials, charges)?;
    let dim = u.nrows();
    let m = initials.len();
    let labels: Vec<(usize, usize)> = charges.iter().map(|c| c.label).collect();
    let mut out: Vec<Trajectory> = initials
        .iter()
        .map(|&z| Trajectory {
            initial: z,
            labels: labels.clone(),
            expectations: Vec::with_capacity(n_max + 1),
            max_norm_drift: 0.0,
        })
        .collect();
    let mut psi = Mat::from_fn(dim, m, |r, c| if r == initials[c].index() { ONE } else { ZERO });
    let mut next = CMat::zeros(dim, m);
    record(psi.as_ref(), charges, &mut out)?;
    for _ in 0..n_max {
        matmul(next.as_mut(), Accum::Replace, u, psi.as_ref(), ONE, Par::Seq);
        std::mem::swap(&mut psi, &mut next);
        record(psi.as_ref(), charges, &mut out)?;
    }
    Ok(out)
}

/// Evaluates ψ(NT) at arbitrary N through the eigendecomposition of U.
#[derive(Clone, Debug)]
pub struct EigenPropagator {
    pub spectrum: QuasiSpectrum,
}

impl EigenPropagator {
    pub fn new(u: MatRef<'_, c64>) -> Result<Self> {
        Ok(Self { spectrum: diagonalize_unitary(u)? })
    }

    /// U^N |z⟩.
    pub fn state_at(&self, initial: BasisState, periods: usize) -> Vec<c64> {
        let v = &self.spectrum.vectors;
        let z = initial.index();
        let coeffs: Vec<c64> = (0..v.ncols())
            .map(|k| v[(z, k)].conj() * cis(-self.spectrum.energies[k] * periods as f64))
            .collect();
        (0..v.nrows()).map(|r| (0..v.ncols()).map(|k| v[(r, k)] * coeffs[k]).sum()).collect()
    }

    /// Charge expectations at the requested periods.
    pub fn expectations(&self, initial: BasisState, periods: &[usize], charges: &[DiagonalObservable]) -> Vec<Vec<f64>> {
        periods
            .iter()
            .map(|&n| {
                let psi = self.state_at(initial, n);
                charges.iter().map(|c| c.expectation(&psi)).collect()
            })
            .collect()
    }
}

/// Λ_j = Σ_{k=1}^{n} e^{−ik2π/n} O_{j,k}, built from the charges of one unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaObservable {
    pub unit: usize,
    pub n_probe: usize,
    /// (index into the charge list, weight).
    pub terms: Vec<(usize, c64)>,
}

impl LambdaObservable {
    /// ⟨Λ⟩ from one row of charge expectations.
    pub fn evaluate(&self, row: &[f64]) -> c64 {
        self.terms.iter().map(|&(c, w)| w * row[c]).sum()
    }

    /// Diagonal of Λ in the Z basis.
    pub fn diag(&self, charges: &[DiagonalObservable]) -> Vec<c64> {
        let dim = charges.first().map_or(0, |c| c.diag.len());
        (0..dim).map(|z| self.terms.iter().map(|&(c, w)| w * charges[c].diag[z]).sum()).collect()
    }
}

/// Λ_j from the charges labelled (unit, slot) with slots 0..n_probe.
pub fn lambda_observable(unit: usize, n_probe: usize, charges: &[DiagonalObservable]) -> Result<LambdaObservable> {
    if n_probe == 0 {
        return Err(Error::Config("probe period must be positive".into()));
    }
    let terms = (0..n_probe)
        .map(|slot| {
            let c = charges
                .iter()
                .position(|q| q.label == (unit, slot))
                .ok_or_else(|| Error::Labeling(format!("no charge for unit {unit}, slot {slot}")))?;
            Ok((c, cis(-((slot + 1) as f64) * TAU / n_probe as f64)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LambdaObservable { unit, n_probe, terms })
}

/// Normalized subharmonic signal A(NT).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubharmonicSeries {
    pub values: Vec<c64>,
    pub n_probe: usize,
    pub lambda: f64,
    pub sites: usize,
    /// Number of disorder realizations averaged.
    pub samples: usize,
}

impl SubharmonicSeries {
    /// Writes `N,re,im,abs,arg` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "N,re,im,abs,arg")?;
        for (n, a) in self.values.iter().enumerate() {
            writeln!(out, "{n},{},{},{},{}", a.re, a.im, a.norm(), a.arg())?;
        }
        Ok(())
    }
}

/// A(NT) = mean_j (1/𝒩_j) Σ_z ⟨Λ_j(NT)⟩_z / ⟨Λ_j(0)⟩_z for one realization.
pub fn subharmonic_series(
    trajectories: &[Trajectory],
    lambdas: &[LambdaObservable],
    lambda: f64,
    sites: usize,
) -> Result<SubharmonicSeries> {
    let first = trajectories.first().ok_or_else(|| Error::Config("no initial states".into()))?;
    let n_probe = lambdas.first().ok_or_else(|| Error::Config("no probe observables".into()))?.n_probe;
    let len = first.expectations.len();
    if trajectories.iter().any(|t| t.expectations.len() != len) {
        return Err(Error::Validation("trajectories have different lengths".into()));
    }
    let mut total = vec![ZERO; len];
    let mut units = 0usize;
    for lam in lambdas {
        let mut acc = vec![ZERO; len];
        let mut count = 0usize;
        for t in trajectories {
            let a0 = lam.evaluate(&t.expectations[0]);
            if a0.norm() < LAMBDA_FLOOR {
                continue;
            }
            count += 1;
            for (a, row) in acc.iter_mut().zip(&t.expectations) {
                *a += lam.evaluate(row) / a0;
            }
        }
        if count > 0 {
            units += 1;
            for (t, a) in total.iter_mut().zip(&acc) {
                *t += a / count as f64;
            }
        }
    }
    if units == 0 {
        return Err(Error::Config("no initial state has a nonzero subharmonic amplitude".into()));
    }
    Ok(SubharmonicSeries {
        values: total.into_iter().map(|a| a / units as f64).collect(),
        n_probe,
        lambda,
        sites,
        samples: 1,
    })
}

/// Mean of several realizations' series.
pub fn average_series(series: &[SubharmonicSeries]) -> Result<SubharmonicSeries> {
    let first = series.first().ok_or_else(|| Error::InsufficientData("no series to average".into()))?;
    if series.iter().any(|s| s.values.len() != first.values.len()) {
        return Err(Error::Validation("series have different lengths".into()));
    }
    let samples: usize = series.iter().map(|s| s.samples).sum();
    let values = (0..first.values.len())
        .map(|n| series.iter().map(|s| s.values[n] * s.samples as f64).sum::<c64>() / samples as f64)
        .collect();
    Ok(SubharmonicSeries { values, samples, ..first.clone() })
}

/// Discrete Fourier spectrum of A(NT) with frequencies in units of ω₀.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierSpectrum {
    /// k/N for k = 0..N, i.e. ω/ω₀ in [0, 1).
    pub frequencies: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub peak_frequency: f64,
    pub peak_magnitude: f64,
    /// Share of Σ|Â|² within [`PEAK_WINDOW`] of the peak.
    pub peak_weight: f64,
}

/// Half-width, in units of ω₀, of the band counted as the peak.
pub const PEAK_WINDOW: f64 = 0.01;

impl FourierSpectrum {
    /// Writes `omega_over_omega0,magnitude` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "omega_over_omega0,magnitude")?;
        for (f, m) in self.frequencies.iter().zip(&self.magnitude) {
            writeln!(out, "{f},{m}")?;
        }
        Ok(())
    }
}

/// Fourier transform of the first N_max samples A(0), …, A((N_max−1)T).
pub fn fourier_analysis(series: &SubharmonicSeries) -> Result<FourierSpectrum> {
    let n = series.values.len().saturating_sub(1);
    if n < 64 {
        return Err(Error::InsufficientData(format!("{n} periods, need at least 64")));
    }
    let mut buf: Vec<c64> = series.values[..n].to_vec();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let magnitude: Vec<f64> = buf.iter().map(|x| x.norm() / n as f64).collect();
    let frequencies: Vec<f64> = (0..n).map(|k| k as f64 / n as f64).collect();
    let (peak, &peak_magnitude) = magnitude
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty spectrum");
    let peak_frequency = frequencies[peak];
    let total: f64 = magnitude.iter().map(|m| m * m).sum();
    let near: f64 = frequencies
        .iter()
        .zip(&magnitude)
        .filter(|(f, _)| {
            let d = (*f - peak_frequency).abs();
            d.min(1.0 - d) <= PEAK_WINDOW
        })
        .map(|(_, m)| m * m)
        .sum();
    Ok(FourierSpectrum {
        frequencies,
        magnitude,
        peak_frequency,
        peak_magnitude,
        peak_weight: if total > 0.0 { near / total } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{decompose_orbits, one_down_per_unit, permutation_network, PermutationMode};
    use crate::charges::{build_q_charges, build_sigma_z_charge, relabel_sites};
    use crate::linalg::{adjoint, max_abs_diff};
    use crate::model::{build_floquet, sample_disorder, ModelConfig};

    fn sigma_charges(n: usize, l: usize) -> Vec<DiagonalObservable> {
        let relabel = relabel_sites(PermutationMode::Tuple(n), l).unwrap();
        (0..relabel.unit_count())
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| build_sigma_z_charge(i, j, &relabel).unwrap())
            .collect()
    }

    fn floquet(config: &ModelConfig, seed: u64) -> CMat {
        build_floquet(config, &sample_disorder(config, seed, 0)).unwrap().matrix
    }

    #[test]
    fn identity_keeps_expectations() {
        let charges = sigma_charges(2, 4);
        let z = BasisState::parse("↓↑↑↓").unwrap();
        let t = evolve_stroboscopic(CMat::identity(16, 16).as_ref(), z, 10, &charges).unwrap();
        assert_eq!(t.expectations.len(), 11);
        assert!(t.expectations.iter().all(|row| row == &t.expectations[0]));
        assert_eq!(t.expectations[0][0], -1.0);
    }

    #[test]
    fn orbits_are_periodic_at_zero_lambda() {
        for (n, l) in [(2, 4), (4, 8), (3, 6), (2, 8)] {
            let config = ModelConfig::tuple(n, l, 0.0);
            let u = floquet(&config, 5);
            let charges = sigma_charges(n, l);
            let net = permutation_network(PermutationMode::Tuple(n), l).unwrap();
            let orbits = decompose_orbits(&net, n).unwrap();
            let seeds: Vec<BasisState> = orbits.iter().map(|o| o.states[0]).collect();
            let trajs = evolve_batch(u.as_ref(), &seeds, 2 * n, &charges).unwrap();
            for (o, t) in orbits.iter().zip(&trajs) {
                for step in 0..=2 * n - o.period {
                    let a = &t.expectations[step];
                    let b = &t.expectations[step + o.period];
                    assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9));
                }
                assert!(t.max_norm_drift < 1e-12);
            }
        }
    }

    #[test]
    fn norm_drift_is_an_error() {
        let charges = sigma_charges(2, 2);
        let mut u = CMat::identity(4, 4);
        u[(0, 0)] = c64::new(1.001, 0.0);
        let err = evolve_stroboscopic(u.as_ref(), BasisState::new(0, 2).unwrap(), 5000, &charges);
        assert!(matches!(err, Err(Error::Numerical(_))));
    }

    #[test]
    fn eigenbasis_path_agrees() {
        let config = ModelConfig::tuple(4, 8, 0.05);
        let u = floquet(&config, 9);
        let charges = sigma_charges(4, 8);
        let z = BasisState::parse("↓↑↑↑↑↓↑↑").unwrap();
        let t = evolve_stroboscopic(u.as_ref(), z, 200, &charges).unwrap();
        let prop = EigenPropagator::new(u.as_ref()).unwrap();
        let times = [0, 1, 7, 64, 200];
        let e = prop.expectations(z, &times, &charges);
        for (row, &n) in e.iter().zip(&times) {
            for (a, b) in row.iter().zip(&t.expectations[n]) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn lambda_picks_up_phase() {
        let n = 4;
        let config = ModelConfig::tuple(n, 8, 0.0);
        let u = floquet(&config, 2);
        let charges = sigma_charges(n, 8);
        for unit in 0..2 {
            let lam = lambda_observable(unit, n, &charges).unwrap();
            let d = crate::linalg::complex_diagonal(&lam.diag(&charges));
            let conj = &adjoint(u.as_ref()) * &d * &u;
            let expect = &d * faer::Scale(cis(TAU / n as f64));
            assert!(max_abs_diff(conj.as_ref(), expect.as_ref()) < 1e-9);
        }
    }

    #[test]
    fn lambda_vanishes_on_short_period_units() {
        let charges = sigma_charges(4, 8);
        let lam = lambda_observable(0, 4, &charges).unwrap();
        let d = lam.diag(&charges);
        let z = BasisState::parse("↓↓↓↓↓↑↑↑").unwrap();
        assert!(d[z.index()].norm() < 1e-12);
        let z = BasisState::parse("↓↑↑↓↓↑↑↑").unwrap();
        assert!(d[z.index()].norm() < 1e-12);
        let two = lambda_observable(0, 2, &sigma_charges(2, 2)).unwrap();
        assert!(two.terms.iter().all(|t| t.1.im.abs() < 1e-15));
    }

    #[test]
    fn exact_subharmonic_response() {
        let n = 4;
        let config = ModelConfig::tuple(n, 8, 0.0);
        let u = floquet(&config, 3);
        let charges = sigma_charges(n, 8);
        let lambdas: Vec<_> = (0..2).map(|j| lambda_observable(j, n, &charges).unwrap()).collect();
        let inits = one_down_per_unit(8, 4).unwrap();
        let trajs = evolve_batch(u.as_ref(), &inits, 40, &charges).unwrap();
        let s = subharmonic_series(&trajs, &lambdas, 0.0, 8).unwrap();
        assert!((s.values[0] - ONE).norm() < 1e-15);
        for (k, a) in s.values.iter().enumerate() {
            assert!((a - cis(k as f64 * TAU / n as f64)).norm() < 1e-9);
        }
    }

    #[test]
    fn transition_response_alternates() {
        let config = ModelConfig::transition(2, 4, 0.6, 8, 0.0);
        let u = floquet(&config, 4);
        let charges = build_q_charges(2, 4, 8).unwrap();
        let lambdas: Vec<_> = (0..2).map(|j| lambda_observable(j, 2, &charges).unwrap()).collect();
        let inits = one_down_per_unit(8, 4).unwrap();
        let trajs = evolve_batch(u.as_ref(), &inits, 30, &charges).unwrap();
        let s = subharmonic_series(&trajs, &lambdas, 0.0, 8).unwrap();
        for (k, a) in s.values.iter().enumerate() {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            assert!((a - c64::new(sign, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn sigma_z_diffuses_while_q_oscillates() {
        let sigmas = sigma_charges(4, 8);
        let qs = build_q_charges(2, 4, 8).unwrap();
        let z = BasisState::parse("↓↑↑↑↓↑↑↑").unwrap();
        let late = 200..400;
        let swing = |t: &Trajectory, c: usize| -> f64 {
            late.clone().map(|n| if n % 2 == 0 { t.expectations[n][c] } else { -t.expectations[n][c] }).sum::<f64>()
                / late.len() as f64
        };
        let mut sigma_amp = 0.0;
        for seed in 0..10 {
            let config = ModelConfig::transition(2, 4, 0.5, 8, 0.0);
            let u = floquet(&config, seed);
            let ts = evolve_stroboscopic(u.as_ref(), z, 400, &sigmas).unwrap();
            let tq = evolve_stroboscopic(u.as_ref(), z, 400, &qs).unwrap();
            assert!((swing(&tq, 0) + 1.0).abs() < 1e-9);
            sigma_amp += swing(&ts, 0).abs() / 10.0;
        }
        assert!(sigma_amp < 0.5 + 0.15, "{sigma_amp}");
    }

    fn tone(freq: f64, len: usize) -> SubharmonicSeries {
        SubharmonicSeries {
            values: (0..=len).map(|k| cis(TAU * freq * k as f64)).collect(),
            n_probe: 4,
            lambda: 0.0,
            sites: 4,
            samples: 1,
        }
    }

    #[test]
    fn pure_tone_peak() {
        let f = fourier_analysis(&tone(0.25, 400)).unwrap();
        assert!((f.peak_frequency - 0.25).abs() < 1e-12);
        assert!((f.peak_weight - 1.0).abs() < 1e-9);
        assert!(fourier_analysis(&tone(0.25, 10)).is_err());
    }

    #[test]
    fn peak_survives_small_noise() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut s = tone(0.5, 2000);
        for v in s.values.iter_mut() {
            *v += c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 2e-3;
        }
        let f = fourier_analysis(&s).unwrap();
        assert!((f.peak_frequency - 0.5).abs() < 1e-12);
    }

    #[test]
    fn averaging_and_export() {
        let a = tone(0.25, 70);
        let b = tone(0.5, 70);
        let m = average_series(&[a.clone(), b]).unwrap();
        assert_eq!(m.samples, 2);
        assert!((m.values[1] - (cis(TAU * 0.25) + cis(TAU * 0.5)) / 2.0).norm() < 1e-15);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 72);
        let mut buf = Vec::new();
        fourier_analysis(&a).unwrap().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 71);
    }
}
