//! Eigendecomposition of unitary matrices.
//!
//! The Hermitian part K = (U + U†)/2 shares eigenvectors with U and is
//! diagonalized with a symmetric solver, which keeps eigenvectors orthonormal.
//! K cannot tell e^{−iε} from e^{+iε}, and near-degenerate eigenvalues of K
//! leave the eigenvectors undetermined within their span, so every cluster of
//! close K-eigenvalues is resolved by a complex Schur decomposition of U
//! compressed onto that cluster.

use faer::{c64, Mat, MatRef};

use super::{fix_column_phases, QuasiSpectrum};
use crate::error::{Error, Result};
use crate::linalg::{from_nalgebra, hermitian_eigen, to_nalgebra, unitarity_error, wrap_angle, CMat};

/// Tolerances of [`diagonalize_unitary_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagOptions {
    /// Largest accepted max |(U†U − 1)_{ab}|.
    pub unitarity_tol: f64,
    /// Neighbouring eigenvalues of K closer than this are resolved together.
    pub cluster_gap: f64,
}

impl Default for DiagOptions {
    fn default() -> Self {
        Self { unitarity_tol: 1e-8, cluster_gap: 1e-6 }
    }
}

/// Full eigensystem of a unitary matrix with default tolerances.
pub fn diagonalize_unitary(u: MatRef<'_, c64>) -> Result<QuasiSpectrum> {
    diagonalize_unitary_with(u, DiagOptions::default())
}

/// Full eigensystem of a unitary matrix.
pub fn diagonalize_unitary_with(u: MatRef<'_, c64>, opts: DiagOptions) -> Result<QuasiSpectrum> {
    let dim = u.nrows();
    if u.ncols() != dim {
        return Err(Error::Validation(format!("matrix is {}x{}, not square", dim, u.ncols())));
    }
    if dim == 0 {
        return Ok(QuasiSpectrum { energies: vec![], vectors: CMat::zeros(0, 0), labels: vec![] });
    }
    let err = unitarity_error(u);
    if !(err < opts.unitarity_tol) {
        return Err(Error::Validation(format!("matrix is not unitary: max |U†U - 1| = {err:e}")));
    }
    let k = Mat::from_fn(dim, dim, |i, j| (u[(i, j)] + u[(j, i)].conj()) * 0.5);
    let (cosines, mut w) = hermitian_eigen(k.as_ref())?;
    let uw = u * &w;
    let mut phases: Vec<c64> = (0..dim)
        .map(|c| (0..dim).map(|r| w[(r, c)].conj() * uw[(r, c)]).sum())
        .collect();

    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && cosines[end] - cosines[end - 1] < opts.cluster_gap {
            end += 1;
        }
        if end - start > 1 {
            resolve_cluster(&mut w, uw.as_ref(), start, end, &mut phases)?;
        }
        start = end;
    }

    let mut energies: Vec<(f64, usize)> = phases.iter().enumerate().map(|(i, p)| (wrap_angle(-p.arg()), i)).collect();
    energies.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut vectors = Mat::from_fn(dim, dim, |r, c| w[(r, energies[c].1)]);
    fix_column_phases(&mut vectors);
    Ok(QuasiSpectrum {
        energies: energies.iter().map(|e| e.0).collect(),
        vectors,
        labels: vec![None; dim],
    })
}

fn resolve_cluster(w: &mut CMat, uw: MatRef<'_, c64>, start: usize, end: usize, phases: &mut [c64]) -> Result<()> {
    let size = end - start;
    let wc = w.as_ref().subcols(start, size);
    let compressed = wc.adjoint() * uw.subcols(start, size);
    let schur = nalgebra::Schur::try_new(to_nalgebra(compressed.as_ref()), f64::EPSILON, 0)
        .ok_or_else(|| Error::LinAlg("complex Schur decomposition did not converge".into()))?;
    let (q, t) = schur.unpack();
    let rotated = wc * from_nalgebra(&q);
    for c in 0..size {
        for r in 0..w.nrows() {
            w[(r, start + c)] = rotated[(r, c)];
        }
        phases[start + c] = t[(c, c)];
    }
    Ok(())
}
