//! Unitary perturbation theory for U(λ) = U₀ e^{−iλV}.
//!
//! Writing the eigenproblem as tan((E − H₀)/2)|ψ⟩ = tan(λV/2)|ψ⟩ in the
//! eigenbasis of U₀ gives a Brillouin–Wigner-type series in T = tan(λV/2)
//! with resolvent R(E) = Σ_{m≠i} cot((E − ε_m)/2)|m⟩⟨m|.

use faer::{c64, ColRef, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    apply_spectral, circle_distance, hermitian_eigen, hermiticity_error, operator_norm, wrap_angle, CMat, ZERO,
};
use crate::spectral::{diagonalize_unitary, QuasiSpectrum};

/// Eigenphases closer than this to ±π make the logarithm ambiguous.
pub const BRANCH_TOL: f64 = 1e-8;

/// Scaled eigenvalues closer than this to π/2 + kπ are treated as poles.
pub const POLE_TOL: f64 = 1e-8;

/// Unperturbed spectrum plus the effective perturbation λV.
#[derive(Clone, Debug)]
pub struct PerturbationProblem {
    spec0: QuasiSpectrum,
    lambda_v: CMat,
    tan_half: CMat,
    tan_norm: f64,
    v_norm: f64,
}

impl PerturbationProblem {
    /// Builds the problem from U₀'s spectrum and the Hermitian generator λV.
    pub fn new(spec0: QuasiSpectrum, lambda_v: CMat) -> Result<Self> {
        let dim = spec0.vectors.nrows();
        if lambda_v.nrows() != dim || lambda_v.ncols() != dim {
            return Err(Error::Validation("perturbation has the wrong shape".into()));
        }
        let v_norm = operator_norm(lambda_v.as_ref())?;
        let herm = hermiticity_error(lambda_v.as_ref());
        if herm > 1e-12 * v_norm.max(1.0) {
            return Err(Error::Validation(format!("perturbation is not Hermitian (error {herm:e})")));
        }
        let t = hermitian_tangent(lambda_v.as_ref(), 0.5)?;
        let tan_half = spec0.vectors.adjoint() * &t * &spec0.vectors;
        let tan_norm = operator_norm(tan_half.as_ref())?;
        Ok(Self { spec0, lambda_v, tan_half, tan_norm, v_norm })
    }

    /// Builds the problem from U₀ and the full unitary U₀e^{−iλV}.
    pub fn from_unitaries(u0: MatRef<'_, c64>, u_full: MatRef<'_, c64>) -> Result<Self> {
        let lambda_v = extract_effective_v(u0, u_full)?;
        Self::new(diagonalize_unitary(u0)?, lambda_v)
    }

    pub fn spec0(&self) -> &QuasiSpectrum {
        &self.spec0
    }

    /// λV in the computational basis.
    pub fn lambda_v(&self) -> &CMat {
        &self.lambda_v
    }

    /// tan(λV/2) in the eigenbasis of U₀.
    pub fn tan_half(&self) -> &CMat {
        &self.tan_half
    }

    /// ‖tan(λV/2)‖₂.
    pub fn tan_norm(&self) -> f64 {
        self.tan_norm
    }

    /// ‖λV‖₂.
    pub fn v_norm(&self) -> f64 {
        self.v_norm
    }

    /// U₀ reassembled from its spectrum.
    pub fn u0(&self) -> CMat {
        let v = &self.spec0.vectors;
        let e = &self.spec0.energies;
        let scaled = Mat::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * crate::linalg::cis(-e[c]));
        &scaled * v.adjoint()
    }

    /// Exact spectrum of U₀e^{−iλV}, the oracle for the series.
    pub fn exact_spectrum(&self) -> Result<QuasiSpectrum> {
        let (vals, vecs) = hermitian_eigen(self.lambda_v.as_ref())?;
        let ul = apply_spectral(&vals, vecs.as_ref(), |x| crate::linalg::cis(-x));
        diagonalize_unitary((self.u0() * ul).as_ref())
    }

    /// Default near-degeneracy threshold max(10⁻⁶, 10‖λV‖).
    pub fn default_cluster_threshold(&self) -> f64 {
        (10.0 * self.v_norm).max(1e-6)
    }

    /// Indices whose quasi-energies chain to `i` through gaps below `threshold`.
    pub fn cluster_of(&self, i: usize, threshold: f64) -> Vec<usize> {
        let e = &self.spec0.energies;
        let mut cluster = vec![i];
        let mut grew = true;
        while grew {
            grew = false;
            for m in 0..e.len() {
                if !cluster.contains(&m) && cluster.iter().any(|&c| circle_distance(e[c], e[m]) < threshold) {
                    cluster.push(m);
                    grew = true;
                }
            }
        }
        cluster.sort_unstable();
        cluster
    }

    fn resolvent(&self, energy: f64, excluded: &[usize]) -> Vec<f64> {
        self.spec0
            .energies
            .iter()
            .enumerate()
            .map(|(m, &em)| if excluded.contains(&m) { 0.0 } else { 1.0 / ((energy - em) / 2.0).tan() })
            .collect()
    }

    fn mul_t(&self, x: &[c64]) -> Vec<c64> {
        let t = &self.tan_half;
        (0..t.nrows()).map(|r| (0..t.ncols()).map(|c| t[(r, c)] * x[c]).sum()).collect()
    }

    /// Margins of the convergence conditions at energy `e` for target `i`.
    fn margins(&self, e: f64, excluded: &[usize]) -> (f64, f64) {
        let mut tan_min = f64::INFINITY;
        let mut dist_min = f64::INFINITY;
        for (m, &em) in self.spec0.energies.iter().enumerate() {
            if excluded.contains(&m) {
                continue;
            }
            tan_min = tan_min.min(((e - em) / 2.0).tan().abs());
            dist_min = dist_min.min(circle_distance(e, em));
        }
        (tan_min - self.tan_norm, dist_min - self.v_norm)
    }
}

/// λV with U₀†U_full = e^{−iλV}, eigenphases taken in (−π, π].
pub fn extract_effective_v(u0: MatRef<'_, c64>, u_full: MatRef<'_, c64>) -> Result<CMat> {
    let w = u0.adjoint() * u_full;
    let spec = diagonalize_unitary(w.as_ref())?;
    if let Some(&phase) = spec.energies.iter().find(|e| e.abs() > std::f64::consts::PI - BRANCH_TOL) {
        return Err(Error::BranchAmbiguity { phase, tol: BRANCH_TOL });
    }
    Ok(apply_spectral(&spec.energies, spec.vectors.as_ref(), |x| c64::new(x, 0.0)))
}

/// tan(factor · A) for Hermitian A.
pub fn hermitian_tangent(a: MatRef<'_, c64>, factor: f64) -> Result<CMat> {
    let (vals, vecs) = hermitian_eigen(a)?;
    if let Some(&x) = vals.iter().find(|&&x| (factor * x).cos().abs() < POLE_TOL) {
        return Err(Error::Pole(factor * x));
    }
    Ok(apply_spectral(&vals, vecs.as_ref(), |x| c64::new((factor * x).tan(), 0.0)))
}

/// Orders E^(1), …, E^(j) of the perturbed quasi-energy of one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    /// `energies[k]` is E^(k+1), wrapped into (−π, π].
    pub energies: Vec<f64>,
    /// Whether the tangent-form convergence condition holds at the final estimate.
    pub converged: bool,
    /// min_{m≠i} |tan((E − ε_m)/2)| − ‖tan(λV/2)‖.
    pub radius_margin: f64,
    /// min_{m≠i} |E − ε_m| − ‖λV‖.
    pub norm_margin: f64,
}

fn isolated_target(problem: &PerturbationProblem, i: usize, threshold: Option<f64>) -> Result<()> {
    if i >= problem.spec0.len() {
        return Err(Error::Validation(format!("target index {i} out of range")));
    }
    let threshold = threshold.unwrap_or_else(|| problem.default_cluster_threshold());
    let cluster = problem.cluster_of(i, threshold);
    if cluster.len() > 1 {
        return Err(Error::DegenerateTarget { index: i, cluster });
    }
    Ok(())
}

/// Σ_{k=1}^{terms} ⟨i|T(R T)^{k−1}|i⟩ with R evaluated at `energy`.
fn series_sum(problem: &PerturbationProblem, i: usize, energy: f64, terms: usize) -> f64 {
    let r = problem.resolvent(energy, &[i]);
    let mut x: Vec<c64> = (0..r.len()).map(|m| problem.tan_half[(m, i)]).collect();
    let mut sum = x[i].re;
    for _ in 1..terms {
        let y: Vec<c64> = x.iter().zip(&r).map(|(a, &b)| a * b).collect();
        x = problem.mul_t(&y);
        sum += x[i].re;
    }
    sum
}

/// Recursive energy series for an isolated level, with the default cluster threshold.
pub fn perturbed_energy_series(problem: &PerturbationProblem, i: usize, max_order: usize) -> Result<SeriesResult> {
    perturbed_energy_series_with(problem, i, max_order, None)
}

/// Recursive energy series for an isolated level.
///
/// E^(1) = ε_i + 2 arctan T_ii and E^(j+1) re-evaluates the first j+1 terms
/// with E^(j) in the resolvent.
pub fn perturbed_energy_series_with(
    problem: &PerturbationProblem,
    i: usize,
    max_order: usize,
    cluster_threshold: Option<f64>,
) -> Result<SeriesResult> {
    if max_order == 0 {
        return Err(Error::Config("series order must be at least 1".into()));
    }
    isolated_target(problem, i, cluster_threshold)?;
    let ei = problem.spec0.energies[i];
    let mut energies = Vec::with_capacity(max_order);
    let mut e = ei + 2.0 * problem.tan_half[(i, i)].re.atan();
    energies.push(e);
    for order in 2..=max_order {
        e = ei + 2.0 * series_sum(problem, i, e, order).atan();
        energies.push(e);
    }
    let (radius_margin, norm_margin) = problem.margins(e, &[i]);
    Ok(SeriesResult {
        energies: energies.into_iter().map(wrap_angle).collect(),
        converged: radius_margin > 0.0,
        radius_margin,
        norm_margin,
    })
}

/// Series approximation of a perturbed eigenvector.
///
/// The series solves the tangent-form equation, whose eigenvector is
/// (1 + e^{−iλV})|ψ⟩; the physical state is recovered as (1 + i tan(λV/2))
/// applied to the series.
#[derive(Clone, Debug)]
pub struct StateExpansion {
    /// Normalised eigenvector of U₀e^{−iλV} in the computational basis.
    pub vector: Vec<c64>,
    /// Unnormalised tangent-form series in the eigenbasis of U₀; component `i` is exactly 1.
    pub eigenbasis: Vec<c64>,
    /// |⟨oracle|ψ⟩| when an oracle vector was supplied.
    pub oracle_overlap: Option<f64>,
    pub converged: bool,
}

/// (1 + RT + (RT)² + …)|i⟩ up to `max_order` powers, with R at E^(max_order).
pub fn perturbed_state_expansion(
    problem: &PerturbationProblem,
    i: usize,
    max_order: usize,
    oracle: Option<ColRef<'_, c64>>,
) -> Result<StateExpansion> {
    let series = perturbed_energy_series(problem, i, max_order.max(1))?;
    let e = *series.energies.last().expect("at least one order");
    let r = problem.resolvent(e, &[i]);
    let dim = r.len();
    let mut term = vec![ZERO; dim];
    term[i] = c64::new(1.0, 0.0);
    let mut psi = term.clone();
    for _ in 0..max_order {
        let t = problem.mul_t(&term);
        term = t.iter().zip(&r).map(|(a, &b)| a * b).collect();
        for (p, x) in psi.iter_mut().zip(&term) {
            *p += x;
        }
    }
    let t_psi = problem.mul_t(&psi);
    let physical: Vec<c64> = psi.iter().zip(&t_psi).map(|(p, t)| p + c64::new(0.0, 1.0) * t).collect();
    let phi = &problem.spec0.vectors;
    let mut vector: Vec<c64> = (0..dim).map(|row| (0..dim).map(|c| phi[(row, c)] * physical[c]).sum()).collect();
    let norm = vector.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    vector.iter_mut().for_each(|x| *x /= norm);
    let oracle_overlap = oracle.map(|o| (0..dim).map(|k| o[k].conj() * vector[k]).sum::<c64>().norm());
    Ok(StateExpansion { vector, eigenbasis: psi, oracle_overlap, converged: series.converged })
}

/// Fixed-point controls of [`degenerate_block_solve`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_iterations: 200 }
    }
}

/// Perturbed energies and mixing coefficients of a near-degenerate cluster.
#[derive(Clone, Debug)]
pub struct DegenerateSolution {
    /// One energy per branch, ascending in the branch index, wrapped into (−π, π].
    pub energies: Vec<f64>,
    /// Column b holds the cluster coefficients of branch b.
    pub mixing: CMat,
    pub iterations: Vec<usize>,
    /// Largest |Im μ| of W̃ found by a non-Hermitian eigensolver.
    pub max_imaginary: f64,
}

/// Ŵ(E) = Σ_{r<order} T(RT)^r projected on the cluster, R excluding the cluster.
fn projected_w(problem: &PerturbationProblem, cluster: &[usize], energy: f64, order: usize) -> CMat {
    let r = problem.resolvent(energy, cluster);
    let k = cluster.len();
    let mut w = CMat::zeros(k, k);
    for (b, &cb) in cluster.iter().enumerate() {
        let mut x: Vec<c64> = (0..r.len()).map(|m| problem.tan_half[(m, cb)]).collect();
        for step in 0..order {
            if step > 0 {
                let y: Vec<c64> = x.iter().zip(&r).map(|(a, &s)| a * s).collect();
                x = problem.mul_t(&y);
            }
            for (a, &ca) in cluster.iter().enumerate() {
                w[(a, b)] += x[ca];
            }
        }
    }
    w
}

/// W̃(E) = Ŵ(E) + diag(tan((E − ε_ref)/2) − tan((E − ε_c)/2)).
fn shifted_w(problem: &PerturbationProblem, cluster: &[usize], reference: usize, energy: f64, order: usize) -> CMat {
    let mut w = projected_w(problem, cluster, energy, order);
    let e = &problem.spec0.energies;
    let eref = e[cluster[reference]];
    for (a, &ca) in cluster.iter().enumerate() {
        w[(a, a)] += c64::new(((energy - eref) / 2.0).tan() - ((energy - e[ca]) / 2.0).tan(), 0.0);
    }
    w
}

/// Solves tan((E − ε_ref)/2) a = W̃(E) a for every branch by fixed-point iteration on E.
///
/// `reference` is a position within `cluster`.
pub fn degenerate_block_solve(
    problem: &PerturbationProblem,
    cluster: &[usize],
    reference: usize,
    max_order: usize,
    opts: FixedPointOptions,
) -> Result<DegenerateSolution> {
    if cluster.is_empty() || reference >= cluster.len() || max_order == 0 {
        return Err(Error::Config("empty cluster, bad reference or zero order".into()));
    }
    if cluster.iter().any(|&c| c >= problem.spec0.len()) {
        return Err(Error::Validation("cluster index out of range".into()));
    }
    let k = cluster.len();
    let eref = problem.spec0.energies[cluster[reference]];
    let branch = |energy: f64, order: usize, b: usize| -> Result<(f64, CMat)> {
        let w = shifted_w(problem, cluster, reference, energy, order);
        let (mu, vecs) = hermitian_eigen(w.as_ref())?;
        Ok((eref + 2.0 * mu[b].atan(), vecs))
    };
    let mut energies = Vec::with_capacity(k);
    let mut iterations = Vec::with_capacity(k);
    let mut mixing = CMat::zeros(k, k);
    let mut max_imaginary = 0.0f64;
    for b in 0..k {
        let mut e = branch(eref, 1, b)?.0;
        let mut converged = false;
        let mut its = 0;
        while its < opts.max_iterations {
            its += 1;
            let next = branch(e, max_order, b)?.0;
            let delta = (next - e).abs();
            e = next;
            if delta < opts.tolerance {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence { iterations: its, last: e });
        }
        let w = shifted_w(problem, cluster, reference, e, max_order);
        let (_, vecs) = hermitian_eigen(w.as_ref())?;
        for a in 0..k {
            mixing[(a, b)] = vecs[(a, b)];
        }
        let general = nalgebra::Schur::new(crate::linalg::to_nalgebra(w.as_ref())).unpack().1;
        for a in 0..k {
            max_imaginary = max_imaginary.max(general[(a, a)].im.abs());
        }
        energies.push(wrap_angle(e));
        iterations.push(its);
    }
    Ok(DegenerateSolution { energies, mixing, iterations, max_imaginary })
}
