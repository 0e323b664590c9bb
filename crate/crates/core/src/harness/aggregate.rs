//! Per-sample records and disorder averages.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outcome of one realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample: u64,
    pub seed: u64,
    /// Content hash of everything that determines this record.
    pub hash: String,
    /// Scalar metrics; log quantities are stored as log10 values.
    pub metrics: BTreeMap<String, f64>,
    /// Error message of a failed realization.
    #[serde(default)]
    pub error: Option<String>,
    /// Optional time series as (re, im) pairs.
    #[serde(default)]
    pub series: Option<Vec<[f64; 2]>>,
}

impl SampleRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Mean and standard error of one metric.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricStat {
    pub mean: f64,
    /// Sample standard deviation over √count; zero for a single sample.
    pub stderr: f64,
    pub count: usize,
    pub min: f64,
    pub max: f64,
}

/// Disorder average of one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub metrics: BTreeMap<String, MetricStat>,
    pub requested: usize,
    pub successes: usize,
    pub failures: usize,
    /// Sample indices that failed.
    pub failed_samples: Vec<u64>,
    pub seed: u64,
    pub config_hash: String,
    pub code_version: String,
}

impl AggregateResult {
    /// True when at least one realization failed.
    pub fn degraded(&self) -> bool {
        self.failures > 0
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.metrics.get(metric).map(|m| m.mean)
    }

    /// Writes `metric,mean,stderr,count,min,max,failures` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "metric,mean,stderr,count,min,max,failures")?;
        for (name, m) in &self.metrics {
            writeln!(out, "{name},{},{},{},{},{},{}", m.mean, m.stderr, m.count, m.min, m.max, self.failures)?;
        }
        Ok(())
    }
}

/// Mean and standard error of a list of values.
pub fn mean_stderr(values: &[f64]) -> MetricStat {
    let n = values.len();
    if n == 0 {
        return MetricStat { mean: f64::NAN, stderr: f64::NAN, count: 0, min: f64::NAN, max: f64::NAN };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    MetricStat { mean, stderr, count: n, min, max }
}

/// Averages the successful records, which must share one metric schema.
///
/// Records are sorted by sample index first, so the result does not depend on
/// the order in which they were produced.
pub fn disorder_average(records: &[SampleRecord], config_hash: &str, seed: u64) -> Result<AggregateResult> {
    let mut sorted: Vec<&SampleRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.sample);
    let ok: Vec<&SampleRecord> = sorted.iter().copied().filter(|r| r.is_ok()).collect();
    let failed_samples: Vec<u64> = sorted.iter().filter(|r| !r.is_ok()).map(|r| r.sample).collect();
    let mut metrics = BTreeMap::new();
    if let Some(first) = ok.first() {
        for r in &ok {
            if !r.metrics.keys().eq(first.metrics.keys()) {
                return Err(Error::Validation(format!(
                    "metric schema of sample {} differs from sample {}",
                    r.sample, first.sample
                )));
            }
        }
        for name in first.metrics.keys() {
            let values: Vec<f64> = ok.iter().map(|r| r.metrics[name]).collect();
            metrics.insert(name.clone(), mean_stderr(&values));
        }
    }
    Ok(AggregateResult {
        metrics,
        requested: records.len(),
        successes: ok.len(),
        failures: failed_samples.len(),
        failed_samples,
        seed,
        config_hash: config_hash.to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
    })
}
