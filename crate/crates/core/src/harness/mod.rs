//! Disorder-averaged sweeps: specifications, per-sample metrics, aggregation,
//! scaling fits and on-disk results.

mod aggregate;
mod fit;
pub mod metrics;
mod run;
mod spec;

pub use aggregate::{disorder_average, mean_stderr, AggregateResult, MetricStat, SampleRecord};
pub use fit::{finite_size_collapse, fit_gap_slope, CollapseResult, GapFit};
pub use run::{gap_fits, run_experiment, AnalysisOutput, DynamicsSummary, GapFamilyFit, PointResult, RunReport, UpttSummary};
pub use spec::{Analysis, AnalysisOptions, ExperimentSpec, Sweep, SweepPoint};
