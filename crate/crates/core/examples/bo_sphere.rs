//! One BOIS run on the 3-D composite sphere, where the optimum (0 at the
//! origin) is known.
//!
//!     cargo run --release --example bo_sphere

use composite_bo::bench::get_benchmark;
use composite_bo::bo::{run, BoConfig, InitialDesign, Variant};
use composite_bo::Result;

pub fn run_example() -> Result<f64> {
    let bench = get_benchmark("sphere-composite")?;
    let config = BoConfig::new(Variant::Bois, 20)
        .with_seed(11)
        .with_initial_design(InitialDesign::SinglePoint {
            x: Some(vec![0.8, -0.6, 0.9]),
        });
    let oracle = bench.oracle();
    let trace = run(&oracle, Some(bench.objective.clone()), &bench.domain, &config)?;

    for r in trace.records.iter().step_by(5) {
        println!(
            "iter {:>2}  f {:.3e}  best {:.3e}  predicted {}",
            r.iteration,
            r.f_obs,
            r.best_f,
            r.m_f.map_or("-".into(), |m| format!("{m:.3e} ± {:.1e}", r.sigma_f.unwrap_or(0.0)))
        );
    }
    let best = trace.incumbent().expect("at least one record");
    println!("best f {:.3e} at {:?} after {} evaluations", best.f, best.x, oracle.eval_count());
    Ok(best.f)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
