//! Power-law fits and finite-size collapse.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares line through (log10 λ, mean log10 Δ) points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the free fit.
    pub residual: f64,
    pub fixed_slope: f64,
    /// Best intercept with the slope held at `fixed_slope`.
    pub fixed_intercept: f64,
    pub fixed_residual: f64,
}

/// Free-slope fit plus a comparison fit at `fixed_slope`.
pub fn fit_gap_slope(points: &[(f64, f64)], fixed_slope: f64) -> Result<GapFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!("{} points, need at least 3", points.len())));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InsufficientData("non-finite point".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 1e-24 * (1.0 + mx * mx) {
        return Err(Error::InsufficientData("abscissae are degenerate".into()));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = |a: f64, b: f64| (points.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum::<f64>() / n).sqrt();
    let fixed_intercept = my - fixed_slope * mx;
    Ok(GapFit {
        slope,
        intercept,
        residual: rms(slope, intercept),
        fixed_slope,
        fixed_intercept,
        fixed_residual: rms(fixed_slope, fixed_intercept),
    })
}

/// Best scaling parameters of a collapse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseResult {
    pub nu: f64,
    pub s_star: f64,
    /// Mean squared mismatch between interpolated curves at the optimum.
    pub score: f64,
}

/// Grid search for (ν, s*) that best collapses ⟨r⟩(L, s) onto one curve of L^{1/ν}(s − s*).
///
/// The score is the mean squared difference between each point and the
/// linearly interpolated curve of every other size at the same scaled
/// abscissa. A coarse grid is followed by one refinement around the optimum.
pub fn finite_size_collapse(
    data: &[(usize, f64, f64)],
    s_star_window: [f64; 2],
    nu_range: [f64; 2],
    steps: usize,
) -> Result<CollapseResult> {
    let mut sizes: Vec<usize> = data.iter().map(|d| d.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 2 {
        return Err(Error::InsufficientData("collapse needs at least two system sizes".into()));
    }
    if steps < 2 || nu_range[0] <= 0.0 || nu_range[0] > nu_range[1] || s_star_window[0] > s_star_window[1] {
        return Err(Error::Config("invalid collapse search grid".into()));
    }
    let curves: Vec<(f64, Vec<(f64, f64)>)> = sizes
        .iter()
        .map(|&l| {
            let mut c: Vec<(f64, f64)> = data.iter().filter(|d| d.0 == l).map(|d| (d.1, d.2)).collect();
            c.sort_by(|a, b| a.0.total_cmp(&b.0));
            (l as f64, c)
        })
        .collect();
    if curves.iter().any(|c| c.1.len() < 2) {
        return Err(Error::InsufficientData("every size needs at least two s values".into()));
    }

    let mut best = search(&curves, s_star_window, nu_range, steps);
    let ds = (s_star_window[1] - s_star_window[0]) / (steps - 1) as f64;
    let dn = (nu_range[1] - nu_range[0]) / (steps - 1) as f64;
    let fine = search(
        &curves,
        [(best.s_star - ds).max(s_star_window[0]), (best.s_star + ds).min(s_star_window[1])],
        [(best.nu - dn).max(nu_range[0]), (best.nu + dn).min(nu_range[1])],
        steps.min(41),
    );
    if fine.score < best.score {
        best = fine;
    }
    if !best.score.is_finite() {
        return Err(Error::InsufficientData("scaled curves never overlap".into()));
    }
    Ok(best)
}

fn search(curves: &[(f64, Vec<(f64, f64)>)], sw: [f64; 2], nr: [f64; 2], steps: usize) -> CollapseResult {
    let mut best = CollapseResult { nu: nr[0], s_star: sw[0], score: f64::INFINITY };
    for a in 0..steps {
        let s_star = sw[0] + (sw[1] - sw[0]) * a as f64 / (steps - 1) as f64;
        for b in 0..steps {
            let nu = nr[0] + (nr[1] - nr[0]) * b as f64 / (steps - 1) as f64;
            let score = collapse_score(curves, nu, s_star);
            if score < best.score {
                best = CollapseResult { nu, s_star, score };
            }
        }
    }
    best
}

fn collapse_score(curves: &[(f64, Vec<(f64, f64)>)], nu: f64, s_star: f64) -> f64 {
    let scaled: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|(l, c)| {
            let f = l.powf(1.0 / nu);
            c.iter().map(|&(s, r)| (f * (s - s_star), r)).collect()
        })
        .collect();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, ci) in scaled.iter().enumerate() {
        for (j, cj) in scaled.iter().enumerate() {
            if i == j {
                continue;
            }
            for &(x, r) in ci {
                if let Some(y) = interpolate(cj, x) {
                    sum += (r - y).powi(2);
                    count += 1;
                }
            }
        }
    }
    if count == 0 {
        f64::INFINITY
    } else {
        sum / count as f64
    }
}

fn interpolate(curve: &[(f64, f64)], x: f64) -> Option<f64> {
    let (first, last) = (curve.first()?, curve.last()?);
    if x < first.0 || x > last.0 {
        return None;
    }
    let k = curve.partition_point(|p| p.0 < x);
    if k == 0 {
        return Some(first.1);
    }
    let (a, b) = (curve[k - 1], curve[k]);
    let t = if b.0 > a.0 { (x - a.0) / (b.0 - a.0) } else { 0.0 };
    Some(a.1 + t * (b.1 - a.1))
}
