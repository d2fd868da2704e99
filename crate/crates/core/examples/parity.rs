//! Moment parity on the flowsheet: fit one GP bank on 50 random samples,
//! then compare linearized moments with Monte Carlo at 10, 100 and 10⁴
//! samples over 200 query points.
//!
//!     cargo run --release --example parity -- [out-dir]

use std::path::{Path, PathBuf};

use composite_bo::experiment::{run_parity, Experiment, ExperimentConfig, ParitySummary};
use composite_bo::Result;

pub fn run_example(out: &Path, query_points: usize) -> Result<ParitySummary> {
    let mut config = ExperimentConfig::new("flowsheet", 0);
    config.seed = 2024;
    config.parity.query_points = query_points;
    let exp = Experiment::from_config(config)?;
    let report = run_parity(&exp, out)?;
    let s = report.summary;
    println!("{} of {} query points in the locally linear regime", s.local_points, s.query_points);
    println!("{:>6} {:>12} {:>12} {:>12} {:>10}", "S", "med dm/m", "med ds/s", "local ds/s", "MC ms");
    for d in &s.discrepancies {
        println!(
            "{:>6} {:>12.3e} {:>12.3e} {:>12.3e} {:>10.1}",
            d.samples, d.mean_median, d.std_median, d.std_median_local, d.mc_total_ms
        );
    }
    println!("BOIS total {:.2} ms; MC at the largest S is {:.0}x slower", s.bois_total_ms, s.speedup);
    println!("rows in {}", out.join("parity.csv").display());
    Ok(s)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("cbo-parity-example"), PathBuf::from);
    run_example(&out, 200).map(|_| ())
}
