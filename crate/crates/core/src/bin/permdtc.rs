//! Command-line front end for disorder-averaged experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use permdtc::harness::{run_experiment, Analysis, AnalysisOutput, ExperimentSpec, RunReport};
use permdtc::{Error, Result};

#[derive(Parser)]
#[command(name = "permdtc", version, about = "Permutation-driven discrete time crystal experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scaling of the 2π/n gap deviation with λ.
    GapScaling(Common),
    /// Level-spacing ratio ⟨r⟩ across the transition weight s.
    RCurve(Common),
    /// Stroboscopic dynamics and the subharmonic spectrum.
    Dynamics(Common),
    /// Error scaling of the perturbation series on random problems.
    UpttValidate(Common),
    /// Charge advance, symmetry and dressed-charge commutators.
    ChargeNorms(Common),
    /// Finite-size collapse of ⟨r⟩ curves.
    Collapse(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Ensemble size per sweep point.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(analysis: Analysis, c: &Common) -> Result<ExperimentSpec> {
    let mut spec = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            let mut spec: ExperimentSpec = toml::from_str(&text)?;
            spec.analysis = analysis;
            spec
        }
        None if analysis == Analysis::UpttValidate => ExperimentSpec::new(analysis, None),
        None => return Err(Error::Config(format!("{} needs --config", analysis.name()))),
    };
    if let Some(s) = c.seed {
        spec.seed = s;
    }
    if let Some(n) = c.samples {
        spec.samples = n;
    }
    if let Some(t) = c.threads {
        spec.threads = Some(t);
    }
    if let Some(o) = &c.out {
        spec.out = Some(o.clone());
    }
    spec.validate()?;
    Ok(spec)
}

fn print_report(report: &RunReport) {
    for p in &report.points {
        let s = p.point.s().map_or(String::new(), |s| format!(" s={s}"));
        print!("L={} lambda={}{s} ok={} failed={}", p.point.model.sites, p.point.lambda(), p.aggregate.successes, p.aggregate.failures);
        for (name, m) in &p.aggregate.metrics {
            print!(" {name}={:.6}±{:.2e}", m.mean, m.stderr);
        }
        println!();
    }
    match &report.output {
        AnalysisOutput::GapFits { fits } => {
            for f in fits {
                println!(
                    "fit L={} slope={:.4} intercept={:.4} residual={:.3e} fixed_slope={} fixed_residual={:.3e} gap0_spread={:.4}",
                    f.sites, f.fit.slope, f.fit.intercept, f.fit.residual, f.fit.fixed_slope, f.fit.fixed_residual, f.gap0_spread
                );
            }
        }
        AnalysisOutput::Dynamics { summaries } => {
            for s in summaries {
                println!("point {} peak={:.5} weight={:.4} samples={}", s.point, s.peak_frequency, s.peak_weight, s.samples);
            }
        }
        AnalysisOutput::Uptt(u) => {
            println!("slopes={:?} max_degenerate_error={:.3e}", u.slopes, u.max_degenerate_error);
        }
        AnalysisOutput::Collapse(c) => println!("nu={:.4} s_star={:.4} score={:.3e}", c.nu, c.s_star, c.score),
        AnalysisOutput::None => {}
    }
    if let Some(d) = &report.out_dir {
        println!("results written to {}", d.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (analysis, common) = match &cli.command {
        Command::GapScaling(c) => (Analysis::GapScaling, c),
        Command::RCurve(c) => (Analysis::RCurve, c),
        Command::Dynamics(c) => (Analysis::Dynamics, c),
        Command::UpttValidate(c) => (Analysis::UpttValidate, c),
        Command::ChargeNorms(c) => (Analysis::ChargeNorms, c),
        Command::Collapse(c) => (Analysis::Collapse, c),
    };
    match load(analysis, common).and_then(|spec| run_experiment(&spec)) {
        Ok(report) => {
            print_report(&report);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
