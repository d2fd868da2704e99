//! Fit a GP to noise-free samples of sin(3x), predict between them, and
//! round-trip the model through JSON.
//!
//!     cargo run --example gp_regression

use composite_bo::gp::{fit, FitOptions, GpModel, KernelFamily};
use composite_bo::{BoxDomain, Dataset, Result};

pub fn run_example() -> Result<Vec<(f64, f64, f64)>> {
    let domain = BoxDomain::new(vec![0.0], vec![2.0])?;
    let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 2.0 / 7.0]).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (3.0 * x[0]).sin()).collect();
    let data = Dataset::scalar(xs, ys)?;

    let options = FitOptions::default().with_seed(7).with_domain(domain);
    let model = fit(&data, KernelFamily::Matern52, &options)?;
    let k = model.kernel();
    println!(
        "lengthscale {:.3}  signal {:.3}  noise {:.2e}  log-lik {:.3}",
        k.lengthscales[0],
        k.signal_variance,
        k.noise_variance,
        model.log_marginal_likelihood()
    );

    let restored = GpModel::from_json(&model.to_json()?)?;
    let mut rows = Vec::new();
    for i in 0..5 {
        let x = 0.15 + 0.4 * i as f64;
        let (m, v) = restored.predict(&[x])?;
        println!("x={x:.2}  mean {m:+.4}  sd {:.4}  truth {:+.4}", v.sqrt(), (3.0 * x).sin());
        rows.push((x, m, v));
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
