//! Level-spacing ratios and dynamically connected subspaces.

use std::collections::VecDeque;

use faer::{c64, Mat, MatRef};

use super::gaps::circular_spacings;
use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Default amplitude threshold for "dynamically coupled".
pub const DEFAULT_COUPLING_TOL: f64 = 1e-12;

/// Mean of min(δ_i, δ_{i+1}) / max(δ_i, δ_{i+1}) over consecutive spacings.
///
/// Pairs of vanishing spacings carry no ratio and are skipped.
pub fn level_ratio_from_spacings(spacings: &[f64]) -> Result<f64> {
    let ratios: Vec<f64> = spacings
        .windows(2)
        .filter_map(|w| {
            let (lo, hi) = if w[0] < w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
            (hi > 0.0).then(|| lo / hi)
        })
        .collect();
    if ratios.is_empty() {
        return Err(Error::InsufficientData("no spacing pairs".into()));
    }
    Ok(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// ⟨r⟩ of quasi-energies on the circle, using every cyclically consecutive spacing pair.
pub fn level_ratio(energies: &[f64]) -> Result<f64> {
    if energies.len() < 3 {
        return Err(Error::InsufficientData(format!("{} levels, need at least 3", energies.len())));
    }
    let mut s = circular_spacings(energies);
    s.push(s[0]);
    level_ratio_from_spacings(&s)
}

/// Basis indices reachable from `seeds` through matrix elements of U or U†
/// larger than `tol` in modulus, sorted ascending.
pub fn dynamical_subspace(u: MatRef<'_, c64>, seeds: &[usize], tol: f64) -> Vec<usize> {
    let dim = u.nrows();
    let mut seen = vec![false; dim];
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &s in seeds {
        if s < dim && !seen[s] {
            seen[s] = true;
            queue.push_back(s);
        }
    }
    while let Some(a) = queue.pop_front() {
        for b in 0..dim {
            if !seen[b] && (u[(b, a)].norm() > tol || u[(a, b)].norm() > tol) {
                seen[b] = true;
                queue.push_back(b);
            }
        }
    }
    (0..dim).filter(|&i| seen[i]).collect()
}

/// Compression of U onto the given basis indices.
pub fn restrict(u: MatRef<'_, c64>, indices: &[usize]) -> CMat {
    Mat::from_fn(indices.len(), indices.len(), |r, c| u[(indices[r], indices[c])])
}
