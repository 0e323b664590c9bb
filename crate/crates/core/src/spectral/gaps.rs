//! Level spacings on the quasi-energy circle.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spacings below this value are clamped before taking logarithms.
pub const SPACING_FLOOR: f64 = 1e-15;

/// Nearest-neighbour spacings Δ^(0) of a full spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapStatistics {
    /// Consecutive spacings of the sorted spectrum, the last one wrapping across ±π.
    pub spacings: Vec<f64>,
    /// Mean of log10 Δ^(0) after clamping.
    pub mean_log10: f64,
    /// Number of spacings raised to [`SPACING_FLOOR`].
    pub clamped: usize,
}

/// Sorted circular spacings of a set of angles in (−π, π].
pub(crate) fn circular_spacings(energies: &[f64]) -> Vec<f64> {
    let mut e = energies.to_vec();
    e.sort_by(f64::total_cmp);
    let n = e.len();
    if n == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = e.windows(2).map(|w| w[1] - w[0]).collect();
    s.push(TAU + e[0] - e[n - 1]);
    s
}

fn clamped_log10(x: f64, clamped: &mut usize) -> f64 {
    if x < SPACING_FLOOR {
        *clamped += 1;
        SPACING_FLOOR.log10()
    } else {
        x.log10()
    }
}

/// Δ^(0) over the whole circle and its mean log10.
pub fn gap_statistics(energies: &[f64]) -> GapStatistics {
    let spacings = circular_spacings(energies);
    let mut clamped = 0;
    let sum: f64 = spacings.iter().map(|&s| clamped_log10(s, &mut clamped)).sum();
    let mean_log10 = if spacings.is_empty() { f64::NAN } else { sum / spacings.len() as f64 };
    GapStatistics { spacings, mean_log10, clamped }
}

/// Deviations Δ^(n) of sector spacings from 2π/n.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubspaceGap {
    pub deviations: Vec<f64>,
    pub max: f64,
    /// log10 of the clamped maximum.
    pub log10_max: f64,
    pub clamped: bool,
}

/// |ε_{α,i+1} − ε_{α,i} − 2π/n| for every group of n eigen-indices.
///
/// Each group holds the indices (into `energies`) of the n eigenpairs of one
/// period-n sector; spacings are taken around the circle.
pub fn subspace_gap_deviation(energies: &[f64], groups: &[Vec<usize>], n: usize) -> Result<SubspaceGap> {
    if n == 0 || groups.is_empty() {
        return Err(Error::Labeling("no sector eigenpairs supplied".into()));
    }
    let target = TAU / n as f64;
    let mut deviations = Vec::with_capacity(groups.len() * n);
    for g in groups {
        if g.len() != n {
            return Err(Error::Labeling(format!("sector with {} eigenpairs is not a period-{n} sector", g.len())));
        }
        let e: Vec<f64> = g.iter().map(|&i| energies[i]).collect();
        deviations.extend(circular_spacings(&e).into_iter().map(|s| (s - target).abs()));
    }
    let max = deviations.iter().copied().fold(0.0, f64::max);
    let mut clamped = 0;
    let log10_max = clamped_log10(max, &mut clamped);
    Ok(SubspaceGap { deviations, max, log10_max, clamped: clamped > 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn equally_spaced_quarter_turns() {
        let g = gap_statistics(&[-FRAC_PI_2, 0.0, FRAC_PI_2, PI]);
        assert!(g.spacings.iter().all(|&s| (s - FRAC_PI_2).abs() < 1e-15));
    }

    #[test]
    fn two_levels_wrap() {
        let g = gap_statistics(&[0.0, PI]);
        assert_eq!(g.spacings, vec![PI, PI]);
    }

    #[test]
    fn spacings_sum_to_full_turn() {
        let e = [-3.0, -0.2, 0.1, 1.5, 3.1];
        let g = gap_statistics(&e);
        assert!((g.spacings.iter().sum::<f64>() - TAU).abs() < 1e-12);
    }

    #[test]
    fn degenerate_levels_are_clamped() {
        let g = gap_statistics(&[0.5, 0.5, 1.0]);
        assert_eq!(g.clamped, 1);
        assert!(g.mean_log10.is_finite());
    }

    #[test]
    fn exact_sector_has_zero_deviation() {
        let e = [0.1, 0.1 + FRAC_PI_2, 0.1 + PI - TAU, 0.1 - FRAC_PI_2];
        let s = subspace_gap_deviation(&e, &[vec![0, 1, 2, 3]], 4).unwrap();
        assert!(s.max < 1e-14);
        assert!(matches!(subspace_gap_deviation(&e, &[vec![0, 1, 2]], 4), Err(Error::Labeling(_))));
    }
}
