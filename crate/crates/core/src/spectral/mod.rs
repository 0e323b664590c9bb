//! Quasi-energy spectra: diagonalization, the solvable eigensystem, gap and
//! level statistics, and eigenstate matching across perturbation strengths.

mod diag;
mod gaps;
mod level;
mod matching;
mod solvable;

pub use diag::{diagonalize_unitary, diagonalize_unitary_with, DiagOptions};
pub use gaps::{gap_statistics, subspace_gap_deviation, GapStatistics, SubspaceGap, SPACING_FLOOR};
pub use level::{dynamical_subspace, level_ratio, level_ratio_from_spacings, restrict, DEFAULT_COUPLING_TOL};
pub use matching::{match_eigenstates, EigenMatch, MatchOptions};
pub use solvable::{solvable_quasi_spectrum, solvable_spectrum, SolvableEigenpair};

use std::io::Write;

use faer::{c64, ColRef, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{cis, CMat};

/// Orbit membership of an eigenpair: eigenvalue index `j` of a period-`period` sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorLabel {
    pub sector: usize,
    pub j: usize,
    pub period: usize,
}

/// Quasi-energies in (−π, π] sorted ascending, with eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct QuasiSpectrum {
    pub energies: Vec<f64>,
    pub vectors: CMat,
    pub labels: Vec<Option<SectorLabel>>,
}

impl QuasiSpectrum {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn vector(&self, i: usize) -> ColRef<'_, c64> {
        self.vectors.col(i)
    }

    /// max_i ‖U v_i − e^{−iε_i} v_i‖₂.
    pub fn residual(&self, u: MatRef<'_, c64>) -> f64 {
        let uv = u * &self.vectors;
        (0..self.len())
            .map(|i| {
                let phase = cis(-self.energies[i]);
                (0..uv.nrows())
                    .map(|r| (uv[(r, i)] - phase * self.vectors[(r, i)]).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// max |⟨v_i|v_j⟩ − δ_ij|.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        crate::linalg::max_abs_diff(g.as_ref(), CMat::identity(g.nrows(), g.ncols()).as_ref())
    }

    /// Rotates every eigenvector so that its largest-magnitude entry is real and positive.
    pub fn fix_phases(&mut self) {
        fix_column_phases(&mut self.vectors);
    }

    /// Writes `index,quasi_energy,sector,j,period,overlap` rows.
    pub fn write_csv<W: Write>(&self, mut out: W, overlaps: Option<&[f64]>) -> Result<()> {
        writeln!(out, "index,quasi_energy,sector,j,period,overlap")?;
        for i in 0..self.len() {
            let (s, j, k) = match self.labels[i] {
                Some(l) => (l.sector.to_string(), l.j.to_string(), l.period.to_string()),
                None => (String::new(), String::new(), String::new()),
            };
            let o = overlaps.map(|o| format!("{:.12e}", o[i])).unwrap_or_default();
            writeln!(out, "{i},{:.15e},{s},{j},{k},{o}", self.energies[i])?;
        }
        Ok(())
    }
}

pub(crate) fn fix_column_phases(v: &mut CMat) {
    for c in 0..v.ncols() {
        let mut best = (0usize, 0.0f64);
        for r in 0..v.nrows() {
            let m = v[(r, c)].norm();
            if m > best.1 + 1e-12 {
                best = (r, m);
            }
        }
        if best.1 > 0.0 {
            let phase = v[(best.0, c)].conj() / best.1;
            for r in 0..v.nrows() {
                v[(r, c)] *= phase;
            }
        }
    }
}
