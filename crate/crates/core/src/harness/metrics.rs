//! Per-realization metrics of every analysis.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use faer::Mat;
use rand::Rng;

use super::spec::AnalysisOptions;
use crate::basis::{orbits_from_seeds, permutation_network, BasisState, PermutationMode, SwapNetwork};
use crate::charges::{
    build_q_charges, build_sigma_z_charge, charge_commutator_norm, dressed_charge, eigen_rotation, relabel_sites,
    symmetry_generator, DiagonalObservable,
};
use crate::dynamics::{evolve_batch, lambda_observable, subharmonic_series, SubharmonicSeries};
use crate::error::{Error, Result};
use crate::linalg::{
    adjoint, circle_distance, cis, complex_diagonal, haar_unitary, max_abs_diff, operator_norm, random_hermitian,
    wrap_angle, CMat,
};
use crate::model::{build_floquet, interaction_energy, sample_disorder, DisorderRealization, DriveMode, ModelConfig, SampleRng, Stream};
use crate::spectral::{
    diagonalize_unitary, dynamical_subspace, gap_statistics, level_ratio, match_eigenstates, restrict,
    solvable_quasi_spectrum, subspace_gap_deviation, EigenMatch, MatchOptions, QuasiSpectrum, SectorLabel,
};
use crate::uptt::{degenerate_block_solve, perturbed_energy_series, FixedPointOptions, PerturbationProblem};

/// Metric name → value.
pub type Metrics = BTreeMap<String, f64>;

/// Tolerance for grouping closure eigenphases into 2π/n ladders.
pub const LADDER_TOL: f64 = 1e-8;

/// All states with exactly one down spin on every site cycle of `network`.
pub fn one_down_per_cycle(network: &SwapNetwork) -> Result<Vec<BasisState>> {
    let cycles = network.site_cycles();
    let total = cycles
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
        .ok_or_else(|| Error::Size("too many initial states".into()))?;
    (0..total)
        .map(|mut code| {
            let mut bits = 0u64;
            for c in &cycles {
                bits |= 1u64 << c[code % c.len()];
                code /= c.len();
            }
            BasisState::new(bits, network.sites())
        })
        .collect()
}

/// Unit pattern repeated along the chain.
pub fn repeated_pattern(pattern: &str, sites: usize) -> Result<BasisState> {
    let unit = BasisState::parse(pattern)?;
    if unit.is_empty() || sites % unit.len() != 0 {
        return Err(Error::Config(format!("seed pattern of length {} does not tile {sites} sites", unit.len())));
    }
    let copies = sites / unit.len();
    let bits = (0..copies).fold(0u64, |acc, k| acc | (unit.bits() << (k * unit.len())));
    BasisState::new(bits, sites)
}

fn network_of(model: &ModelConfig) -> Result<(SwapNetwork, PermutationMode)> {
    let mode = model
        .drive
        .permutation_mode()
        .ok_or_else(|| Error::Config("analysis needs a permutation drive".into()))?;
    Ok((permutation_network(mode, model.sites)?, mode))
}

/// Labelled unperturbed eigenpairs of the one-down-per-unit sectors.
#[derive(Clone, Debug)]
pub struct SectorReference {
    /// Columns are unperturbed eigenvectors; labels carry sector and ladder index.
    pub spec0: QuasiSpectrum,
    /// Column indices of `spec0` per sector.
    pub groups: Vec<Vec<usize>>,
    pub period: usize,
}

/// Sector reference at λ = 0 for the realization `r`.
///
/// Tuple drives use the closed-form orbit eigenpairs. Transition drives
/// diagonalize U₀ on the closure of the seed states and group its
/// eigenphases into ladders spaced by 2π/n_G.
pub fn sector_reference(model: &ModelConfig, r: &DisorderRealization, coupling_tol: f64) -> Result<SectorReference> {
    let model0 = model.with_lambda(0.0);
    let r = &sample_disorder(&model0, r.seed, r.sample);
    let (network, mode) = network_of(model)?;
    let seeds = one_down_per_cycle(&network)?;
    let dim = model.dimension();
    let period = mode.charge_period();
    let spec0 = match mode {
        PermutationMode::Tuple(n) => {
            let mut orbits: Vec<_> = orbits_from_seeds(&network, n, &seeds).into_iter().filter(|o| o.period == n).collect();
            for (k, o) in orbits.iter_mut().enumerate() {
                o.sector_id = k;
            }
            if orbits.is_empty() {
                return Err(Error::Labeling("no full-period sector".into()));
            }
            solvable_quasi_spectrum(&orbits, |z| interaction_energy(r, z.bits()) * model.t3, dim)
        }
        PermutationMode::Transition { .. } => {
            let u0 = build_floquet(&model0, r)?.matrix;
            let idx: Vec<usize> = seeds.iter().map(|z| z.index()).collect();
            let closure = dynamical_subspace(u0.as_ref(), &idx, coupling_tol);
            let sub = diagonalize_unitary(restrict(u0.as_ref(), &closure).as_ref())?;
            ladder_spectrum(&sub, &closure, dim, period)?
        }
    };
    let sectors = spec0.labels.iter().flatten().map(|l| l.sector).max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); sectors];
    for (c, l) in spec0.labels.iter().enumerate() {
        let l = l.ok_or_else(|| Error::Labeling("unlabelled reference eigenpair".into()))?;
        groups[l.sector].push(c);
    }
    Ok(SectorReference { spec0, groups, period })
}

/// Groups closure eigenpairs into ladders ε, ε + 2π/n, … and embeds them in the full space.
fn ladder_spectrum(sub: &QuasiSpectrum, closure: &[usize], dim: usize, n: usize) -> Result<QuasiSpectrum> {
    let m = sub.len();
    if m % n != 0 {
        return Err(Error::Labeling(format!("closure of dimension {m} is not a union of period-{n} ladders")));
    }
    let step = TAU / n as f64;
    let mut used = vec![false; m];
    let mut labels = vec![None; m];
    let mut sector = 0;
    for k in 0..m {
        if used[k] {
            continue;
        }
        used[k] = true;
        labels[k] = Some(SectorLabel { sector, j: 1, period: n });
        for j in 1..n {
            let target = sub.energies[k] + j as f64 * step;
            let best = (0..m)
                .filter(|&c| !used[c])
                .min_by(|&a, &b| {
                    circle_distance(sub.energies[a], target).total_cmp(&circle_distance(sub.energies[b], target))
                })
                .ok_or_else(|| Error::Labeling("incomplete eigenphase ladder".into()))?;
            let d = circle_distance(sub.energies[best], target);
            if d > LADDER_TOL {
                return Err(Error::Labeling(format!("eigenphase ladder broken by {d:e}")));
            }
            used[best] = true;
            labels[best] = Some(SectorLabel { sector, j: j + 1, period: n });
        }
        sector += 1;
    }
    let mut vectors = CMat::zeros(dim, m);
    for c in 0..m {
        for (r, &row) in closure.iter().enumerate() {
            vectors[(row, c)] = sub.vectors[(r, c)];
        }
    }
    Ok(QuasiSpectrum { energies: sub.energies.clone(), vectors, labels })
}

fn match_opts(opts: &AnalysisOptions) -> MatchOptions {
    MatchOptions { min_overlap: opts.min_overlap, ..MatchOptions::default() }
}

fn all_columns(spec: &QuasiSpectrum) -> Vec<usize> {
    (0..spec.len()).collect()
}

fn match_summary(m: &mut Metrics, matching: &EigenMatch) {
    m.insert("min_overlap".into(), matching.min_overlap);
    m.insert("ambiguous".into(), f64::from(u8::from(matching.ambiguous)));
}

/// log10 of the worst 2π/n deviation in the matched sectors and the mean log10 Δ^(0).
pub fn gap_scaling_sample(model: &ModelConfig, seed: u64, sample: u64, opts: &AnalysisOptions) -> Result<Metrics> {
    let r = sample_disorder(model, seed, sample);
    let spec = diagonalize_unitary(build_floquet(model, &r)?.matrix.as_ref())?;
    let reference = sector_reference(model, &r, opts.coupling_tol)?;
    let matching = match_eigenstates(&reference.spec0, &spec, &all_columns(&reference.spec0), match_opts(opts))?;
    let groups: Vec<Vec<usize>> = reference
        .groups
        .iter()
        .map(|g| g.iter().map(|&c| matching.target_of(c).expect("every reference column is matched")).collect())
        .collect();
    let gap = subspace_gap_deviation(&spec.energies, &groups, reference.period)?;
    let mut m = Metrics::new();
    m.insert("log10_gap_n".into(), gap.log10_max);
    m.insert("mean_log10_gap0".into(), gap_statistics(&spec.energies).mean_log10);
    m.insert("sectors".into(), groups.len() as f64);
    match_summary(&mut m, &matching);
    Ok(m)
}

/// ⟨r⟩ in the subspace dynamically coupled to the repeated seed pattern.
pub fn r_curve_sample(model: &ModelConfig, seed: u64, sample: u64, opts: &AnalysisOptions) -> Result<Metrics> {
    let r = sample_disorder(model, seed, sample);
    let u = build_floquet(model, &r)?.matrix;
    let z = repeated_pattern(&opts.r_seed, model.sites)?;
    let closure = dynamical_subspace(u.as_ref(), &[z.index()], opts.coupling_tol);
    let sub = diagonalize_unitary(restrict(u.as_ref(), &closure).as_ref())?;
    let mut m = Metrics::new();
    m.insert("r".into(), level_ratio(&sub.energies)?);
    m.insert("subspace_dim".into(), closure.len() as f64);
    Ok(m)
}

/// Charges and their n-probe for a drive.
pub fn dtc_charges(model: &ModelConfig) -> Result<(Vec<DiagonalObservable>, usize, usize)> {
    match model.drive {
        DriveMode::Tuple { n } => {
            let relabel = relabel_sites(PermutationMode::Tuple(n), model.sites)?;
            let units = relabel.unit_count();
            let charges = (0..units)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| build_sigma_z_charge(i, j, &relabel))
                .collect::<Result<Vec<_>>>()?;
            Ok((charges, n, units))
        }
        DriveMode::Transition { n1, n2, .. } => {
            let charges = build_q_charges(n1, n2, model.sites)?;
            let units = charges.iter().map(|c| c.label.0).max().map_or(0, |u| u + 1);
            Ok((charges, crate::basis::gcd(n1, n2), units))
        }
        DriveMode::KickedIsing => Err(Error::Config("dynamics needs a permutation drive".into())),
    }
}

/// A(NT) of one realization together with its Fourier peak.
pub fn dynamics_sample(
    model: &ModelConfig,
    seed: u64,
    sample: u64,
    opts: &AnalysisOptions,
) -> Result<(Metrics, SubharmonicSeries)> {
    let r = sample_disorder(model, seed, sample);
    let u = build_floquet(model, &r)?.matrix;
    let (network, _) = network_of(model)?;
    let initials = one_down_per_cycle(&network)?;
    let (charges, n_probe, units) = dtc_charges(model)?;
    let lambdas = (0..units).map(|j| lambda_observable(j, n_probe, &charges)).collect::<Result<Vec<_>>>()?;
    let traj = evolve_batch(u.as_ref(), &initials, opts.periods, &charges)?;
    let series = subharmonic_series(&traj, &lambdas, model.lambda, model.sites)?;
    let mut m = Metrics::new();
    let drift = traj.iter().map(|t| t.max_norm_drift).fold(0.0, f64::max);
    m.insert("max_norm_drift".into(), drift);
    if series.values.len() > 64 {
        let f = crate::dynamics::fourier_analysis(&series)?;
        m.insert("peak_frequency".into(), f.peak_frequency);
        m.insert("peak_weight".into(), f.peak_weight);
    }
    let exact = series
        .values
        .iter()
        .enumerate()
        .map(|(k, a)| (a - cis(k as f64 * TAU / n_probe as f64)).norm())
        .fold(0.0, f64::max);
    m.insert("max_deviation_from_ideal".into(), exact);
    Ok((m, series))
}

/// A random perturbation problem with U₀ Haar-distributed and ‖V‖ = 1.
pub fn random_uptt_problem<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<(QuasiSpectrum, CMat)> {
    let w = haar_unitary(dim, rng);
    let phases: Vec<_> = (0..dim).map(|_| cis(-rng.random_range(-PI..PI))).collect();
    let u0 = &(&w * complex_diagonal(&phases)) * w.adjoint();
    let v = random_hermitian(dim, rng);
    let norm = operator_norm(v.as_ref())?;
    let v = Mat::from_fn(dim, dim, |i, j| v[(i, j)] / norm);
    Ok((diagonalize_unitary(u0.as_ref())?, v))
}

/// Engineered problem whose levels 0 and 1 of U₀ coincide and whose V does not couple the pair to the rest.
pub fn degenerate_uptt_problem<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<(QuasiSpectrum, CMat)> {
    let w = haar_unitary(dim, rng);
    let base = rng.random_range(-2.5..2.5);
    let mut eps = vec![base, base];
    while eps.len() < dim {
        let e: f64 = rng.random_range(-PI..PI);
        if eps.iter().all(|&x| circle_distance(x, e) > 0.2) {
            eps.push(e);
        }
    }
    let u0 = &(&w * complex_diagonal(&eps.iter().map(|&e| cis(-e)).collect::<Vec<_>>())) * w.adjoint();
    let pair = random_hermitian(2, rng);
    let rest = random_hermitian(dim - 2, rng);
    let block = Mat::from_fn(dim, dim, |i, j| match (i < 2, j < 2) {
        (true, true) => pair[(i, j)],
        (false, false) => rest[(i - 2, j - 2)],
        _ => crate::linalg::ZERO,
    });
    let v = &(&w * &block) * w.adjoint();
    let norm = operator_norm(v.as_ref())?;
    let v = Mat::from_fn(dim, dim, |i, j| v[(i, j)] / norm);
    Ok((diagonalize_unitary(u0.as_ref())?, v))
}

fn scaled(v: &CMat, lambda: f64) -> CMat {
    Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * lambda)
}

/// Index of the level farthest from its neighbours.
fn most_isolated(energies: &[f64]) -> usize {
    (0..energies.len())
        .max_by(|&a, &b| {
            let gap = |i: usize| {
                (0..energies.len()).filter(|&j| j != i).map(|j| circle_distance(energies[i], energies[j])).fold(f64::INFINITY, f64::min)
            };
            gap(a).total_cmp(&gap(b))
        })
        .unwrap_or(0)
}

/// Series errors on one random problem and the degenerate-solver error on one engineered problem.
///
/// Problems are redrawn until the series converges with a positive margin at
/// the largest λ.
pub fn uptt_sample(seed: u64, sample: u64, lambdas: &[f64], opts: &AnalysisOptions) -> Result<Metrics> {
    let mut rng = SampleRng::new(seed, sample, Stream::Auxiliary);
    let lmax = lambdas.iter().copied().fold(0.0, f64::max);
    let mut m = Metrics::new();
    let mut attempts = 0;
    let (spec0, v, target) = loop {
        attempts += 1;
        if attempts > 100 {
            return Err(Error::NonConvergence { iterations: 100, last: lmax });
        }
        let (spec0, v) = random_uptt_problem(opts.problem_dim, &mut rng)?;
        let target = most_isolated(&spec0.energies);
        let p = PerturbationProblem::new(spec0.clone(), scaled(&v, lmax))?;
        let s = perturbed_energy_series(&p, target, opts.max_order)?;
        if s.converged && s.radius_margin > 0.0 {
            m.insert("radius_margin".into(), s.radius_margin);
            break (spec0, v, target);
        }
    };
    m.insert("attempts".into(), attempts as f64);
    for (li, &lambda) in lambdas.iter().enumerate() {
        let p = PerturbationProblem::new(spec0.clone(), scaled(&v, lambda))?;
        let exact = p.exact_spectrum()?;
        let series = perturbed_energy_series(&p, target, opts.max_order)?;
        let e_exact = nearest(&exact.energies, series.energies[0]);
        for (k, e) in series.energies.iter().enumerate() {
            let err = circle_distance(*e, e_exact).max(1e-300);
            m.insert(format!("log10_err_o{}_l{li}", k + 1), err.log10());
        }
    }

    let (spec0, v) = degenerate_uptt_problem(opts.problem_dim, &mut rng)?;
    let lambda = lmax;
    let p = PerturbationProblem::new(spec0, scaled(&v, lambda))?;
    let pair = p.cluster_of(0, 1e-9);
    let cluster = if pair.len() == 2 {
        pair
    } else {
        let e = &p.spec0().energies;
        let k = (0..e.len()).find(|&k| circle_distance(e[k], e[(k + 1) % e.len()]) < 1e-9).ok_or_else(|| {
            Error::Labeling("engineered degeneracy not found".into())
        })?;
        vec![k, (k + 1) % e.len()]
    };
    let sol = degenerate_block_solve(&p, &cluster, 0, 2, FixedPointOptions::default())?;
    let exact = p.exact_spectrum()?;
    let err = sol.energies.iter().map(|&e| circle_distance(e, nearest(&exact.energies, e))).fold(0.0, f64::max);
    m.insert("degenerate_error".into(), err);
    m.insert("degenerate_max_imaginary".into(), sol.max_imaginary);
    Ok(m)
}

fn nearest(energies: &[f64], e: f64) -> f64 {
    energies
        .iter()
        .copied()
        .min_by(|a, b| circle_distance(*a, e).total_cmp(&circle_distance(*b, e)))
        .unwrap_or(f64::NAN)
}

/// Commutator and advance checks for the charges of a drive.
pub fn charge_norms_sample(model: &ModelConfig, seed: u64, sample: u64, opts: &AnalysisOptions) -> Result<Metrics> {
    let r = sample_disorder(model, seed, sample);
    let u = build_floquet(model, &r)?.matrix;
    let model0 = model.with_lambda(0.0);
    let u0 = build_floquet(&model0, &sample_disorder(&model0, seed, sample))?.matrix;
    let mut m = Metrics::new();
    if model.drive == DriveMode::KickedIsing {
        let spec = diagonalize_unitary(u0.as_ref())?;
        m.insert("pi_pairing_error".into(), pi_pairing_error(&spec.energies));
        return Ok(m);
    }
    let (charges, n_probe, _) = dtc_charges(model)?;
    let u0d = adjoint(u0.as_ref());
    let mut advance: f64 = 0.0;
    for q in &charges {
        let next = charges
            .iter()
            .find(|c| c.label == (q.label.0, (q.label.1 + 1) % n_probe))
            .ok_or_else(|| Error::Labeling("charge ladder incomplete".into()))?;
        let conj = &(&u0d * q.dense()) * &u0;
        advance = advance.max(max_abs_diff(conj.as_ref(), next.dense().as_ref()));
    }
    m.insert("advance_error".into(), advance);

    let spec = diagonalize_unitary(u.as_ref())?;
    let spec0 = match model.drive {
        DriveMode::Tuple { n } => {
            let (network, _) = network_of(model)?;
            let orbits = crate::basis::decompose_orbits(&network, n)?;
            let spec0 = solvable_quasi_spectrum(&orbits, |z| interaction_energy(&r, z.bits()) * model.t3, model.dimension());
            let s = symmetry_generator(&spec0, n)?;
            m.insert("symmetry_order_error".into(), s.order_error());
            m.insert("symmetry_commutator".into(), charge_commutator_norm(u0.as_ref(), s.matrix.as_ref(), 1, None)?);
            spec0
        }
        _ => diagonalize_unitary(u0.as_ref())?,
    };
    let matching = match_eigenstates(&spec0, &spec, &all_columns(&spec0), match_opts(opts))?;
    match_summary(&mut m, &matching);
    let rotation = eigen_rotation(&spec0, &spec, &matching, 0.0);
    let tau = dressed_charge(&charges[0], &rotation);
    let comm = charge_commutator_norm(u.as_ref(), tau.as_ref(), n_probe, None)?;
    m.insert("tau_commutator".into(), comm);
    m.insert("log10_tau_commutator".into(), comm.max(1e-300).log10());
    let bare = charge_commutator_norm(u.as_ref(), charges[0].dense().as_ref(), n_probe, None)?;
    m.insert("bare_commutator".into(), bare);
    m.insert("charge_dressing".into(), operator_norm((&tau - charges[0].dense()).as_ref())?);
    Ok(m)
}

/// max over levels of the distance from ε + π to the nearest level.
pub fn pi_pairing_error(energies: &[f64]) -> f64 {
    energies
        .iter()
        .map(|&e| {
            let partner = wrap_angle(e + PI);
            energies.iter().map(|&f| circle_distance(f, partner)).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_down_per_cycle_counts() {
        let net = permutation_network(PermutationMode::Tuple(4), 8).unwrap();
        let states = one_down_per_cycle(&net).unwrap();
        assert_eq!(states.len(), 16);
        for z in &states {
            for c in net.site_cycles() {
                assert_eq!(c.iter().filter(|&&s| z.is_down(s)).count(), 1);
            }
        }
    }

    #[test]
    fn repeated_seed() {
        let z = repeated_pattern("↓↑↑↑", 8).unwrap();
        assert_eq!(z.bits(), 0b0001_0001);
        assert!(repeated_pattern("↓↑↑", 8).is_err());
    }

    #[test]
    fn tuple_reference_at_zero_lambda_is_exact() {
        let model = ModelConfig::tuple(4, 8, 0.0);
        let m = gap_scaling_sample(&model, 3, 0, &AnalysisOptions::default()).unwrap();
        assert!(m["log10_gap_n"] < -9.0, "{m:?}");
        assert_eq!(m["sectors"], 4.0);
        assert!(m["min_overlap"] > 0.999);
    }

    #[test]
    fn transition_reference_forms_ladders() {
        let model = ModelConfig::transition(2, 4, 0.6, 4, 0.0);
        let r = sample_disorder(&model, 1, 0);
        let reference = sector_reference(&model, &r, 1e-12).unwrap();
        assert!(reference.groups.iter().all(|g| g.len() == 2));
        let u0 = build_floquet(&model, &r).unwrap().matrix;
        assert!(reference.spec0.residual(u0.as_ref()) < 1e-9);
        let m = gap_scaling_sample(&model, 1, 0, &AnalysisOptions::default()).unwrap();
        assert!(m["log10_gap_n"] < -9.0, "{m:?}");
    }

    #[test]
    fn gap_opens_with_lambda() {
        let model = ModelConfig::tuple(4, 4, 0.05);
        let m = gap_scaling_sample(&model, 5, 1, &AnalysisOptions::default()).unwrap();
        assert!(m["log10_gap_n"] > -8.0 && m["log10_gap_n"] < 0.0, "{m:?}");
        assert!(m["mean_log10_gap0"].is_finite());
    }

    #[test]
    fn pi_pairing_detects_pairs() {
        assert!(pi_pairing_error(&[0.1, 0.1 - PI, 1.0, 1.0 - PI]) < 1e-15);
        assert!(pi_pairing_error(&[0.1, 0.2]) > 1.0);
    }

    #[test]
    fn uptt_sample_has_all_orders() {
        let m = uptt_sample(1, 0, &[0.04, 0.02, 0.01], &AnalysisOptions::default()).unwrap();
        for o in 1..=3 {
            assert!(m[&format!("log10_err_o{o}_l2")] < m[&format!("log10_err_o{o}_l0")]);
        }
        assert!(m["degenerate_error"] < 1e-8, "{m:?}");
    }

    #[test]
    fn charge_norms_on_small_tuple() {
        let model = ModelConfig::tuple(2, 4, 0.02);
        let m = charge_norms_sample(&model, 2, 0, &AnalysisOptions::default()).unwrap();
        assert!(m["advance_error"] < 1e-9);
        assert!(m["symmetry_order_error"] < 1e-9);
        assert!(m["symmetry_commutator"] < 1e-9);
        assert!(m["tau_commutator"] < m["bare_commutator"], "{m:?}");
    }
}
