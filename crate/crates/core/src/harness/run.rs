//! Parallel execution, persistence and post-processing of an experiment.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::aggregate::{disorder_average, AggregateResult, SampleRecord};
use super::fit::{finite_size_collapse, fit_gap_slope, CollapseResult, GapFit};
use super::metrics::{self, Metrics};
use super::spec::{Analysis, ExperimentSpec, SweepPoint};
use crate::dynamics::{average_series, fourier_analysis, SubharmonicSeries};
use crate::error::{Error, Result};
use crate::linalg::ZERO;
use crate::model::DriveMode;

/// Aggregate of one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub point: SweepPoint,
    pub aggregate: AggregateResult,
}

/// Slope fit of one (L, s) family of gap-scaling points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapFamilyFit {
    pub sites: usize,
    pub s: Option<f64>,
    /// Fit of mean log10 Δ^(n) against log10 λ.
    pub fit: GapFit,
    /// max − min of mean log10 Δ^(0) across λ.
    pub gap0_spread: f64,
}

/// Fourier summary of the disorder-averaged A(NT).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsSummary {
    pub point: usize,
    pub peak_frequency: f64,
    pub peak_weight: f64,
    pub samples: usize,
}

/// Mean-log error slopes of the perturbation series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpttSummary {
    pub lambdas: Vec<f64>,
    /// `slopes[j-1]` is the fitted slope of order j.
    pub slopes: Vec<f64>,
    pub max_degenerate_error: f64,
}

/// Analysis-level output on top of the per-point aggregates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnalysisOutput {
    None,
    GapFits { fits: Vec<GapFamilyFit> },
    Dynamics { summaries: Vec<DynamicsSummary> },
    Uptt(UpttSummary),
    Collapse(CollapseResult),
}

/// Everything a run produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub analysis: Analysis,
    pub points: Vec<PointResult>,
    pub output: AnalysisOutput,
    /// Averaged A(NT) per point, for dynamics runs.
    #[serde(skip)]
    pub series: Vec<SubharmonicSeries>,
    pub out_dir: Option<PathBuf>,
}

impl RunReport {
    /// Mean of `metric` at every point, in sweep order.
    pub fn means(&self, metric: &str) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.aggregate.mean(metric)).collect()
    }
}

#[derive(Serialize)]
struct HashInput<'a> {
    analysis: Analysis,
    point: &'a SweepPoint,
    options: &'a super::spec::AnalysisOptions,
    uptt_lambdas: Vec<f64>,
    seed: u64,
    version: &'static str,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn point_hash(spec: &ExperimentSpec, point: &SweepPoint) -> Result<String> {
    let input = HashInput {
        analysis: spec.analysis,
        point,
        options: &spec.options,
        uptt_lambdas: spec.uptt_lambdas(),
        seed: spec.seed,
        version: env!("CARGO_PKG_VERSION"),
    };
    Ok(sha256_hex(&serde_json::to_vec(&input)?))
}

fn sample_hash(point_hash: &str, sample: u64) -> String {
    sha256_hex(format!("{point_hash}:{sample}").as_bytes())
}

/// Runs every sweep point and writes results when `spec.out` is set.
///
/// Existing sample files whose content hash matches are reused, so a repeated
/// run only computes what is missing.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<RunReport> {
    spec.validate()?;
    faer::set_global_parallelism(faer::Par::Seq);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let out = spec.out.clone();
    if let Some(dir) = &out {
        fs::create_dir_all(dir)?;
        write_manifest(spec, dir)?;
    }
    let mut points = Vec::new();
    let mut series = Vec::new();
    for point in spec.points()? {
        let hash = point_hash(spec, &point)?;
        let dir = out.as_ref().map(|d| d.join(point.dir_name()));
        let records = pool.install(|| run_point(spec, &point, &hash, dir.as_deref()))?;
        let aggregate = disorder_average(&records, &hash, spec.seed)?;
        if spec.analysis == Analysis::Dynamics {
            let ok: Vec<SubharmonicSeries> = records.iter().filter(|r| r.is_ok()).filter_map(|r| to_series(r, &point)).collect();
            if !ok.is_empty() {
                series.push(average_series(&ok)?);
            }
        }
        if let Some(d) = &dir {
            aggregate.write_csv(fs::File::create(d.join("aggregate.csv"))?)?;
        }
        points.push(PointResult { point, aggregate });
    }
    let output = post_process(spec, &points, &series)?;
    let report = RunReport { analysis: spec.analysis, points, output, series, out_dir: out.clone() };
    if let Some(dir) = &out {
        write_outputs(&report, dir)?;
    }
    Ok(report)
}

fn run_point(spec: &ExperimentSpec, point: &SweepPoint, hash: &str, dir: Option<&Path>) -> Result<Vec<SampleRecord>> {
    if let Some(d) = dir {
        fs::create_dir_all(d.join("samples"))?;
    }
    (0..spec.samples as u64)
        .into_par_iter()
        .map(|sample| {
            let h = sample_hash(hash, sample);
            let path = dir.map(|d| d.join("samples").join(format!("{sample:04}.json")));
            if let Some(p) = &path {
                if let Ok(text) = fs::read_to_string(p) {
                    if let Ok(rec) = serde_json::from_str::<SampleRecord>(&text) {
                        if rec.hash == h {
                            return Ok(rec);
                        }
                    }
                }
            }
            let rec = compute_sample(spec, point, sample, h);
            if let Some(p) = &path {
                fs::write(p, serde_json::to_string(&rec)?)?;
            }
            Ok(rec)
        })
        .collect()
}

fn compute_sample(spec: &ExperimentSpec, point: &SweepPoint, sample: u64, hash: String) -> SampleRecord {
    let model = &point.model;
    let opts = &spec.options;
    let seed = spec.seed;
    let mut series = None;
    let result: Result<Metrics> = match spec.analysis {
        Analysis::GapScaling => metrics::gap_scaling_sample(model, seed, sample, opts),
        Analysis::RCurve | Analysis::Collapse => metrics::r_curve_sample(model, seed, sample, opts),
        Analysis::Dynamics => metrics::dynamics_sample(model, seed, sample, opts).map(|(m, s)| {
            series = Some(s.values.iter().map(|a| [a.re, a.im]).collect());
            m
        }),
        Analysis::UpttValidate => metrics::uptt_sample(seed, sample, &spec.uptt_lambdas(), opts),
        Analysis::ChargeNorms => metrics::charge_norms_sample(model, seed, sample, opts),
    };
    match result {
        Ok(metrics) => SampleRecord { sample, seed, hash, metrics, error: None, series },
        Err(e) => SampleRecord { sample, seed, hash, metrics: Default::default(), error: Some(e.to_string()), series: None },
    }
}

fn to_series(rec: &SampleRecord, point: &SweepPoint) -> Option<SubharmonicSeries> {
    let values = rec.series.as_ref()?.iter().map(|&[re, im]| crate::c64::new(re, im) + ZERO).collect();
    Some(SubharmonicSeries {
        values,
        n_probe: point.model.drive.charge_period(),
        lambda: point.model.lambda,
        sites: point.model.sites,
        samples: 1,
    })
}

fn post_process(spec: &ExperimentSpec, points: &[PointResult], series: &[SubharmonicSeries]) -> Result<AnalysisOutput> {
    Ok(match spec.analysis {
        Analysis::GapScaling => AnalysisOutput::GapFits { fits: gap_fits(points)? },
        Analysis::Dynamics => AnalysisOutput::Dynamics {
            summaries: series
                .iter()
                .enumerate()
                .filter(|(_, s)| s.values.len() > 64)
                .map(|(k, s)| {
                    let f = fourier_analysis(s)?;
                    Ok(DynamicsSummary {
                        point: k,
                        peak_frequency: f.peak_frequency,
                        peak_weight: f.peak_weight,
                        samples: s.samples,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        },
        Analysis::UpttValidate => AnalysisOutput::Uptt(uptt_summary(spec, &points[0].aggregate)?),
        Analysis::Collapse => {
            let data: Vec<(usize, f64, f64)> = points
                .iter()
                .filter_map(|p| Some((p.point.model.sites, p.point.s()?, p.aggregate.mean("r")?)))
                .collect();
            let o = &spec.options;
            AnalysisOutput::Collapse(finite_size_collapse(&data, o.s_star_window, o.nu_range, o.grid_steps)?)
        }
        Analysis::RCurve | Analysis::ChargeNorms => AnalysisOutput::None,
    })
}

/// Fits mean log10 Δ^(n) against log10 λ for every (L, s) family with at least three λ values.
pub fn gap_fits(points: &[PointResult]) -> Result<Vec<GapFamilyFit>> {
    let mut families: Vec<(usize, Option<f64>)> = Vec::new();
    for p in points {
        let key = (p.point.model.sites, p.point.s());
        if !families.contains(&key) {
            families.push(key);
        }
    }
    let mut fits = Vec::new();
    for (sites, s) in families {
        let members: Vec<&PointResult> =
            points.iter().filter(|p| p.point.model.sites == sites && p.point.s() == s).collect();
        let pts: Vec<(f64, f64)> = members
            .iter()
            .filter(|p| p.point.lambda() > 0.0)
            .filter_map(|p| Some((p.point.lambda().log10(), p.aggregate.mean("log10_gap_n")?)))
            .collect();
        if pts.len() < 3 {
            continue;
        }
        let unit = match members[0].point.model.drive {
            DriveMode::Tuple { n } => n,
            DriveMode::Transition { n1, n2, .. } => crate::basis::lcm(n1, n2),
            DriveMode::KickedIsing => 2,
        };
        let fit = fit_gap_slope(&pts, (sites / unit) as f64)?;
        let gap0: Vec<f64> = members.iter().filter_map(|p| p.aggregate.mean("mean_log10_gap0")).collect();
        let spread = gap0.iter().copied().fold(f64::NEG_INFINITY, f64::max) - gap0.iter().copied().fold(f64::INFINITY, f64::min);
        fits.push(GapFamilyFit { sites, s, fit, gap0_spread: spread });
    }
    Ok(fits)
}

fn uptt_summary(spec: &ExperimentSpec, agg: &AggregateResult) -> Result<UpttSummary> {
    let lambdas = spec.uptt_lambdas();
    let mut slopes = Vec::new();
    for order in 1..=spec.options.max_order {
        let pts: Vec<(f64, f64)> = lambdas
            .iter()
            .enumerate()
            .filter_map(|(k, l)| Some((l.log10(), agg.mean(&format!("log10_err_o{order}_l{k}"))?)))
            .collect();
        slopes.push(fit_gap_slope(&pts, (order + 1) as f64)?.slope);
    }
    let max_degenerate_error = agg.metrics.get("degenerate_error").map_or(f64::NAN, |m| m.max);
    Ok(UpttSummary { lambdas, slopes, max_degenerate_error })
}

fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

#[derive(Serialize)]
struct Manifest<'a> {
    spec: &'a ExperimentSpec,
    seed: u64,
    code_version: &'static str,
    git_describe: String,
}

fn write_manifest(spec: &ExperimentSpec, dir: &Path) -> Result<()> {
    let m = Manifest { spec, seed: spec.seed, code_version: env!("CARGO_PKG_VERSION"), git_describe: git_describe() };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&m)?)?;
    Ok(())
}

fn write_outputs(report: &RunReport, dir: &Path) -> Result<()> {
    let mut names: Vec<String> = Vec::new();
    for p in &report.points {
        for k in p.aggregate.metrics.keys() {
            if !names.contains(k) {
                names.push(k.clone());
            }
        }
    }
    let mut f = fs::File::create(dir.join("summary.csv"))?;
    write!(f, "point,sites,lambda,s,successes,failures")?;
    for n in &names {
        write!(f, ",{n},{n}_stderr")?;
    }
    writeln!(f)?;
    for p in &report.points {
        let s = p.point.s().map_or(String::new(), |s| s.to_string());
        write!(
            f,
            "{},{},{},{},{},{}",
            p.point.index, p.point.model.sites, p.point.model.lambda, s, p.aggregate.successes, p.aggregate.failures
        )?;
        for n in &names {
            match p.aggregate.metrics.get(n) {
                Some(m) => write!(f, ",{},{}", m.mean, m.stderr)?,
                None => write!(f, ",,")?,
            }
        }
        writeln!(f)?;
    }
    for (p, s) in report.points.iter().zip(&report.series) {
        let d = dir.join(p.point.dir_name());
        s.write_csv(fs::File::create(d.join("series.csv"))?)?;
        if s.values.len() > 64 {
            fourier_analysis(s)?.write_csv(fs::File::create(d.join("fourier.csv"))?)?;
        }
    }
    fs::write(dir.join("analysis.json"), serde_json::to_string_pretty(&report.output)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;

    #[test]
    fn rerun_is_byte_identical_and_reuses_samples() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = ExperimentSpec::new(Analysis::GapScaling, Some(ModelConfig::tuple(4, 4, 0.0)));
        spec.sweep.lambda = vec![0.05, 0.02, 0.01];
        spec.samples = 2;
        spec.seed = 9;
        spec.out = Some(dir.path().to_path_buf());
        let a = run_experiment(&spec).unwrap();
        let summary = fs::read(dir.path().join("summary.csv")).unwrap();
        let sample_file = dir.path().join(a.points[0].point.dir_name()).join("samples/0000.json");
        let stamp = fs::metadata(&sample_file).unwrap().modified().unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(summary, fs::read(dir.path().join("summary.csv")).unwrap());
        assert_eq!(stamp, fs::metadata(&sample_file).unwrap().modified().unwrap());
        assert!(dir.path().join("manifest.json").exists());
        assert!(matches!(a.output, AnalysisOutput::GapFits { ref fits } if fits.len() == 1));
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let mut spec = ExperimentSpec::new(Analysis::RCurve, Some(ModelConfig::transition(2, 4, 0.5, 4, 0.0)));
        spec.options.r_seed = "↑↑↑↑".into();
        spec.samples = 3;
        let rep = run_experiment(&spec).unwrap();
        let agg = &rep.points[0].aggregate;
        assert_eq!(agg.failures, 3);
        assert_eq!(agg.successes + agg.failures, 3);
        assert!(agg.degraded());
    }

    #[test]
    fn independent_of_thread_count() {
        let mut spec = ExperimentSpec::new(Analysis::RCurve, Some(ModelConfig::transition(2, 4, 0.5, 8, 0.0)));
        spec.samples = 4;
        spec.threads = Some(1);
        let a = run_experiment(&spec).unwrap();
        spec.threads = Some(3);
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a.points, b.points);
    }
}
