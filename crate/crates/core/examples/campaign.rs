//! A small multi-start campaign on the penalty toy problem: all three
//! variants from the same 4 random starts, then the aggregate report.
//!
//!     cargo run --release --example campaign -- [out-dir]

use std::path::{Path, PathBuf};

use composite_bo::bo::InitialDesign;
use composite_bo::experiment::{run_campaign, run_report, Experiment, ExperimentConfig, ReportOutcome};
use composite_bo::Result;

pub fn run_example(out: &Path, starts: usize, iterations: usize) -> Result<ReportOutcome> {
    let mut config = ExperimentConfig::new("penalty-quadratic", iterations);
    config.seed = 42;
    config.campaign = InitialDesign::Random { n: starts };
    config.bo.mc_samples = 128;
    let exp = Experiment::from_config(config)?;

    let campaign = run_campaign(&exp, out)?;
    println!(
        "{} cells, all completed: {}",
        campaign.index.cells.len(),
        campaign.index.all_completed()
    );
    let report = run_report(&campaign.index_path, &out.join("report"))?;
    let optimum = exp.benchmark.optimum.as_ref().map_or(f64::NAN, |o| o.value);
    for f in &report.summary.comparison.finals {
        println!(
            "{:<5} mean final gap {:.2e}  p10..p90 {:.2e}..{:.2e}",
            f.variant,
            f.mean - optimum,
            f.p10 - optimum,
            f.p90 - optimum
        );
    }
    for c in &report.summary.comparison.checks {
        println!("[{}] {}", if c.passed { "ok" } else { "review" }, c.name);
    }
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("cbo-campaign-example"), PathBuf::from);
    run_example(&out, 4, 15).map(|_| ())
}
