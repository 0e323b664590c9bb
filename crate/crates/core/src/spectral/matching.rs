//! Matching eigenstates of two spectra by maximal total overlap.

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::QuasiSpectrum;
use crate::error::{Error, Result};
use crate::linalg::circle_distance;

/// Options of [`match_eigenstates`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchOptions {
    /// Only pairs whose quasi-energies are this close on the circle may match.
    /// `None` compares every pair.
    pub window: Option<f64>,
    /// A matched |overlap| below this marks the match ambiguous.
    pub min_overlap: f64,
    /// Reference levels closer than this form a degenerate cluster.
    pub degeneracy_tol: f64,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self { window: None, min_overlap: 0.5, degeneracy_tol: 1e-8 }
    }
}

/// Result of [`match_eigenstates`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenMatch {
    /// (reference index, matched index), in the order of the requested subset.
    pub pairs: Vec<(usize, usize)>,
    /// |⟨φ_i|ψ_σ(i)⟩| for every pair.
    pub overlaps: Vec<f64>,
    pub min_overlap: f64,
    pub ambiguous: bool,
    /// Number of degenerate reference clusters resolved greedily.
    pub degenerate_clusters: usize,
}

impl EigenMatch {
    /// Matched index of a reference index.
    pub fn target_of(&self, reference: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == reference).map(|p| p.1)
    }
}

/// Assigns every reference eigenpair in `subset` to a distinct eigenpair of
/// `spec`, maximising Σ|⟨φ_i|ψ_σ(i)⟩|².
pub fn match_eigenstates(
    spec0: &QuasiSpectrum,
    spec: &QuasiSpectrum,
    subset: &[usize],
    opts: MatchOptions,
) -> Result<EigenMatch> {
    if spec0.vectors.nrows() != spec.vectors.nrows() {
        return Err(Error::Validation("spectra live in different spaces".into()));
    }
    if subset.len() > spec.len() {
        return Err(Error::Validation("subset larger than target spectrum".into()));
    }
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != subset.len() || sorted.last().is_some_and(|&i| i >= spec0.len()) {
        return Err(Error::Validation("subset indices must be distinct and in range".into()));
    }
    let rows = subset.len();
    if rows == 0 {
        return Ok(EigenMatch { pairs: vec![], overlaps: vec![], min_overlap: 1.0, ambiguous: false, degenerate_clusters: 0 });
    }
    let dim = spec0.vectors.nrows();
    let phi = Mat::from_fn(dim, rows, |r, c| spec0.vectors[(r, subset[c])]);
    let overlap = phi.adjoint() * &spec.vectors;
    let weight = |r: usize, c: usize| -> f64 {
        if let Some(w) = opts.window {
            if circle_distance(spec0.energies[subset[r]], spec.energies[c]) > w {
                return 0.0;
            }
        }
        overlap[(r, c)].norm_sqr()
    };

    let mut columns: Vec<usize> = (0..spec.len())
        .filter(|&c| (0..rows).any(|r| weight(r, c) > 1e-10))
        .collect();
    if columns.len() < rows {
        columns = (0..spec.len()).collect();
    }
    let cost: Vec<Vec<f64>> = (0..rows).map(|r| columns.iter().map(|&c| 1.0 - weight(r, c)).collect()).collect();
    let assignment = hungarian(&cost);
    let mut target: Vec<usize> = assignment.iter().map(|&k| columns[k]).collect();

    let mut order: Vec<usize> = (0..rows).collect();
    order.sort_by(|&a, &b| spec0.energies[subset[a]].total_cmp(&spec0.energies[subset[b]]));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &r in &order {
        match clusters.last_mut() {
            Some(c)
                if circle_distance(spec0.energies[subset[*c.last().unwrap()]], spec0.energies[subset[r]])
                    < opts.degeneracy_tol =>
            {
                c.push(r)
            }
            _ => clusters.push(vec![r]),
        }
    }
    if clusters.len() > 1 {
        let first = &clusters[0];
        let last = clusters.last().unwrap();
        if circle_distance(spec0.energies[subset[first[0]]], spec0.energies[subset[*last.last().unwrap()]]) < opts.degeneracy_tol {
            let tail = clusters.pop().unwrap();
            clusters[0].extend(tail);
        }
    }
    let mut degenerate_clusters = 0;
    for cluster in clusters.iter().filter(|c| c.len() > 1) {
        degenerate_clusters += 1;
        let mut free: Vec<usize> = cluster.iter().map(|&r| target[r]).collect();
        let mut pending = cluster.clone();
        while !pending.is_empty() {
            let mut best = (0, 0, -1.0);
            for (pi, &r) in pending.iter().enumerate() {
                for (fi, &c) in free.iter().enumerate() {
                    let w = weight(r, c);
                    if w > best.2 {
                        best = (pi, fi, w);
                    }
                }
            }
            let r = pending.swap_remove(best.0);
            target[r] = free.swap_remove(best.1);
        }
    }

    let overlaps: Vec<f64> = (0..rows).map(|r| overlap[(r, target[r])].norm()).collect();
    let min_overlap = overlaps.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(EigenMatch {
        pairs: (0..rows).map(|r| (subset[r], target[r])).collect(),
        overlaps,
        min_overlap,
        ambiguous: degenerate_clusters > 0 || min_overlap < opts.min_overlap,
        degenerate_clusters,
    })
}

/// Minimum-cost assignment of every row to a distinct column (rows ≤ columns).
fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let m = cost[0].len();
    assert!(n <= m);
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}
