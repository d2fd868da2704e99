//! The three ways of turning a Gaussian posterior over `y` into a mean and
//! standard deviation of `f`.
//!
//!     cargo run --example moment_engines

use std::sync::Arc;

use composite_bo::moments::{
    bois_moments, exact_linear_moments, mc_moments, moment_engine, CompositeObjective, EngineConfig,
    FnObjective, LinearObjective, ReferencePolicy,
};
use composite_bo::gp::PosteriorGaussian;
use composite_bo::Result;

pub struct Comparison {
    pub linear: [(f64, f64); 3],
    pub curved: [(f64, f64); 2],
}

pub fn run_example() -> Result<Comparison> {
    let post = PosteriorGaussian::diagonal(vec![1.0, -0.5, 2.0], vec![0.04, 0.01, 0.09]);
    let x = [0.0];

    // affine in y: all three engines agree up to sampling noise
    let lin = LinearObjective::new(vec![2.0, -1.0, 0.5], 3.0);
    let exact = exact_linear_moments(&lin, post.mean().as_slice(), post.covariance())?;
    let bois = bois_moments(&lin, &x, &post, ReferencePolicy::AtMean)?;
    let mc = mc_moments(&lin, &x, &post, 20_000, 1)?;
    println!("linear  exact {:.5} ± {:.5}", exact.mean, exact.std);
    println!("linear  bois  {:.5} ± {:.5}", bois.mean, bois.std);
    println!("linear  mc    {:.5} ± {:.5}", mc.mean, mc.std);

    // curved in y: the linearization drops the curvature terms
    let curved: Arc<dyn CompositeObjective> = Arc::new(
        FnObjective::new(3, |_x| 0.0, |_x, y| (0.3 * y[0] + 0.2 * y[2]).exp() + y[1] * y[1])
            .with_gradient(|_x, y| {
                let e = (0.3 * y[0] + 0.2 * y[2]).exp();
                vec![0.3 * e, 2.0 * y[1], 0.2 * e]
            }),
    );
    let bois_eval = moment_engine(
        &EngineConfig::Bois {
            policy: ReferencePolicy::relative_offset(),
        },
        curved.clone(),
    )?;
    let mc_eval = moment_engine(
        &EngineConfig::MonteCarlo {
            samples: 20_000,
            seed: 5,
        },
        curved,
    )?;
    let b = bois_eval.evaluate(&x, &post)?;
    let m = mc_eval.evaluate(&x, &post)?;
    println!("curved  bois  {:.5} ± {:.5}", b.mean, b.std);
    println!("curved  mc    {:.5} ± {:.5}", m.mean, m.std);

    Ok(Comparison {
        linear: [(exact.mean, exact.std), (bois.mean, bois.std), (mc.mean, mc.std)],
        curved: [(b.mean, b.std), (m.mean, m.std)],
    })
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example().map(|_| ())
}
