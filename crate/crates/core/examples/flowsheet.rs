//! Simulate the reactor/separator/recycle flowsheet at the middle of its
//! operating box and price the result.
//!
//!     cargo run --example flowsheet

use composite_bo::bench::{
    default_flowsheet, process_cost, simulate_flowsheet, solve_recycle, ProcessInputs, StreamVector,
};
use composite_bo::Result;

pub fn run_example() -> Result<(StreamVector, f64)> {
    let (params, weights) = default_flowsheet();
    let x = ProcessInputs::from_slice(&ProcessInputs::domain().midpoint())?;

    let state = solve_recycle(&x, &params)?;
    println!("recycle converged in {} iterations", state.iterations);

    let y = simulate_flowsheet(&x, &params)?;
    for (name, v) in StreamVector::NAMES.iter().zip(y.to_vec()) {
        println!("{name:>5} {v:>12.5}");
    }
    let cost = process_cost(&y, &weights)?;
    println!("f1 {:.4}  f2 {:.4}  f {:.4}", cost.f1, cost.f2, cost.f);

    let total_in = params.feed[0] + params.feed[1];
    println!("mass in {total_in}  out {:.10}", y.product_flow + y.purge_flow);
    Ok((y, cost.f))
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
