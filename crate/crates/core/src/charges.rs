//! DTC-charges, the Z_n symmetry generator and emergent-symmetry diagnostics.
//!
//! Slots `j` are 0-based here: σ^z_{i,0} is the first site of unit `i` and
//! U†σ^z_{i,j}U = σ^z_{i,j+1} at λ = 0.

use std::io::Write;

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::basis::{gcd, permutation_network, PermutationMode};
use crate::error::{Error, Result};
use crate::linalg::{cis, matrix_power, operator_norm, CMat, ZERO};
use crate::spectral::{EigenMatch, QuasiSpectrum};

/// Physical site of every (unit, slot) pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteRelabeling {
    pub mode: PermutationMode,
    pub sites: usize,
    /// `units[i][j]` is the site carrying σ_{i,j}.
    pub units: Vec<Vec<usize>>,
}

impl SiteRelabeling {
    /// Site of σ_{i,j}; the slot wraps around the unit.
    pub fn site(&self, i: usize, j: usize) -> usize {
        let unit = &self.units[i];
        unit[j % unit.len()]
    }

    pub fn unit_count(&self) -> usize {
        self.units.len()
    }

    /// Writes `unit,slot,site` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "unit,slot,site")?;
        for (i, unit) in self.units.iter().enumerate() {
            for (j, site) in unit.iter().enumerate() {
                writeln!(out, "{i},{j},{site}")?;
            }
        }
        Ok(())
    }
}

/// Tracks σ^z_{i,0} through successive unperturbed periods.
pub fn relabel_sites(mode: PermutationMode, sites: usize) -> Result<SiteRelabeling> {
    let network = permutation_network(mode, sites)?;
    let period = network.period();
    let units = network.site_cycles();
    if let Some(bad) = units.iter().find(|c| c.len() != period) {
        return Err(Error::Labeling(format!("site cycle of length {} in a period-{period} network", bad.len())));
    }
    Ok(SiteRelabeling { mode, sites, units })
}

/// An observable diagonal in the Z basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalObservable {
    /// Value on every basis state.
    pub diag: Vec<f64>,
    /// (unit, slot).
    pub label: (usize, usize),
    /// Sites whose σ^z are summed.
    pub sites: Vec<usize>,
}

impl DiagonalObservable {
    /// Σ_s σ^z_s over `sites` on a chain of `len` sites.
    pub fn sigma_z_sum(sites: &[usize], len: usize, label: (usize, usize)) -> Self {
        let diag = (0..1u64 << len)
            .map(|z| sites.iter().map(|&s| if (z >> s) & 1 == 1 { -1.0 } else { 1.0 }).sum())
            .collect();
        Self { diag, label, sites: sites.to_vec() }
    }

    pub fn dense(&self) -> CMat {
        let n = self.diag.len();
        Mat::from_fn(n, n, |r, c| if r == c { c64::new(self.diag[r], 0.0) } else { ZERO })
    }

    /// ⟨ψ|O|ψ⟩.
    pub fn expectation(&self, psi: &[c64]) -> f64 {
        psi.iter().zip(&self.diag).map(|(a, d)| a.norm_sqr() * d).sum()
    }
}

/// σ^z_{i,j} as a diagonal.
pub fn build_sigma_z_charge(i: usize, j: usize, relabel: &SiteRelabeling) -> Result<DiagonalObservable> {
    if i >= relabel.unit_count() {
        return Err(Error::Validation(format!("unit {i} out of range")));
    }
    Ok(DiagonalObservable::sigma_z_sum(&[relabel.site(i, j)], relabel.sites, (i, j)))
}

/// Q_{i,j} = Σ_m σ^z_{i, n_G·m + j} for every unit `i` and slot `j < n_G`.
pub fn build_q_charges(n1: usize, n2: usize, sites: usize) -> Result<Vec<DiagonalObservable>> {
    let relabel = relabel_sites(PermutationMode::Transition { n1, n2 }, sites)?;
    let ng = gcd(n1, n2);
    let mut out = Vec::with_capacity(relabel.unit_count() * ng);
    for (i, unit) in relabel.units.iter().enumerate() {
        for j in 0..ng {
            let members: Vec<usize> = unit.iter().skip(j).step_by(ng).copied().collect();
            out.push(DiagonalObservable::sigma_z_sum(&members, sites, (i, j)));
        }
    }
    Ok(out)
}

/// Writes `unit,slot,sites` rows, sites separated by `;`.
pub fn write_charge_table<W: Write>(charges: &[DiagonalObservable], mut out: W) -> Result<()> {
    writeln!(out, "unit,slot,sites")?;
    for q in charges {
        let sites: Vec<String> = q.sites.iter().map(|s| s.to_string()).collect();
        writeln!(out, "{},{},{}", q.label.0, q.label.1, sites.join(";"))?;
    }
    Ok(())
}

/// Σ_α Σ_j e^{−ij2π/k_α}|φ_{α,j}⟩⟨φ_{α,j}|.
#[derive(Clone, Debug)]
pub struct SymmetryOperator {
    pub matrix: CMat,
    pub order: usize,
}

impl SymmetryOperator {
    /// max |(Sⁿ − 1)_{ab}|.
    pub fn order_error(&self) -> f64 {
        let p = matrix_power(self.matrix.as_ref(), self.order);
        let dim = p.nrows();
        crate::linalg::max_abs_diff(p.as_ref(), CMat::identity(dim, dim).as_ref())
    }
}

/// Builds S from a fully labelled spectrum; every sector period must divide `n`.
pub fn symmetry_generator(spec: &QuasiSpectrum, n: usize) -> Result<SymmetryOperator> {
    let dim = spec.vectors.nrows();
    if spec.len() != dim {
        return Err(Error::Labeling("spectrum is incomplete".into()));
    }
    let mut weights = Vec::with_capacity(dim);
    for (c, label) in spec.labels.iter().enumerate() {
        let label = label.ok_or_else(|| Error::Labeling(format!("eigenpair {c} has no sector label")))?;
        if label.period == 0 || n % label.period != 0 {
            return Err(Error::Labeling(format!("sector period {} does not divide {n}", label.period)));
        }
        weights.push(cis(-(label.j as f64) * std::f64::consts::TAU / label.period as f64));
    }
    let v = &spec.vectors;
    let scaled = Mat::from_fn(dim, dim, |r, c| v[(r, c)] * weights[c]);
    Ok(SymmetryOperator { matrix: &scaled * v.adjoint(), order: n })
}

/// Copies labels from a reference spectrum onto the matched eigenpairs of `spec`.
pub fn transfer_labels(spec0: &QuasiSpectrum, spec: &QuasiSpectrum, matching: &EigenMatch) -> QuasiSpectrum {
    let mut out = spec.clone();
    out.labels = vec![None; spec.len()];
    for &(a, b) in &matching.pairs {
        out.labels[b] = spec0.labels[a];
    }
    out
}

/// ‖[U^power, O]‖₂, optionally compressed to the span of the columns of `basis`.
pub fn charge_commutator_norm(
    u: MatRef<'_, c64>,
    charge: MatRef<'_, c64>,
    power: usize,
    basis: Option<MatRef<'_, c64>>,
) -> Result<f64> {
    let up = matrix_power(u, power);
    let comm = &up * charge - charge * &up;
    match basis {
        Some(b) => operator_norm((b.adjoint() * &comm * b).as_ref()),
        None => operator_norm(comm.as_ref()),
    }
}

/// The eigen-match rotation 𝒱 = Σ_i |ψ_σ(i)⟩⟨φ_i| over well-matched pairs.
#[derive(Clone, Debug)]
pub struct EigenRotation {
    pub matrix: CMat,
    /// Reference indices left out because their overlap was below the threshold.
    pub excluded: Vec<usize>,
}

/// Builds 𝒱 from a matching, leaving out pairs with |overlap| < `min_overlap`.
pub fn eigen_rotation(
    spec0: &QuasiSpectrum,
    spec: &QuasiSpectrum,
    matching: &EigenMatch,
    min_overlap: f64,
) -> EigenRotation {
    let dim = spec0.vectors.nrows();
    let mut matrix = CMat::zeros(dim, dim);
    let mut excluded = Vec::new();
    for (&(a, b), &ov) in matching.pairs.iter().zip(&matching.overlaps) {
        if ov < min_overlap {
            excluded.push(a);
            continue;
        }
        let (phi, psi) = (spec0.vector(a), spec.vector(b));
        for c in 0..dim {
            let w = phi[c].conj();
            for r in 0..dim {
                matrix[(r, c)] += psi[r] * w;
            }
        }
    }
    EigenRotation { matrix, excluded }
}

/// τ^z = 𝒱 O 𝒱† for a diagonal charge O.
pub fn dressed_charge(charge: &DiagonalObservable, rotation: &EigenRotation) -> CMat {
    let v = &rotation.matrix;
    let scaled = Mat::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * charge.diag[c]);
    &scaled * v.adjoint()
}
