use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{GaussianSampler, PosteriorGaussian};
use crate::moments::objective::{CompositeObjective, LinearObjective};

/// Relative finite-difference step for Jacobians.
pub const FD_STEP: f64 = 1e-6;
/// Quadratic forms below `-VARIANCE_CLAMP` (relative) are errors; above, clamped to 0.
pub const VARIANCE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    ExactLinear,
    MonteCarlo,
    Bois,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::ExactLinear => "exact-linear",
            Engine::MonteCarlo => "monte-carlo",
            Engine::Bois => "bois",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MomentMeta {
    None,
    Samples(usize),
    Reference(Vec<f64>),
}

/// Mean and standard deviation of `f` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std: f64,
    pub engine: Engine,
    pub meta: MomentMeta,
}

/// Where the linearization of `h` is taken.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum ReferencePolicy {
    /// `ŷ₀ = ŷ`.
    #[default]
    AtMean,
    /// `ŷ₀ = ŷ (1 - delta)` componentwise.
    RelativeOffset { delta: f64 },
}

impl ReferencePolicy {
    pub const DEFAULT_DELTA: f64 = 1e-3;

    pub fn relative_offset() -> Self {
        ReferencePolicy::RelativeOffset {
            delta: Self::DEFAULT_DELTA,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ReferencePolicy::RelativeOffset { delta } if !delta.is_finite() => {
                Err(Error::config("reference offset delta must be finite"))
            }
            _ => Ok(()),
        }
    }

    pub fn reference(&self, mean: &[f64]) -> Vec<f64> {
        match *self {
            ReferencePolicy::AtMean => mean.to_vec(),
            ReferencePolicy::RelativeOffset { delta } => {
                mean.iter().map(|m| m * (1.0 - delta)).collect()
            }
        }
    }
}

fn quadratic_form(a: &[f64], cov: &DMatrix<f64>) -> Result<f64> {
    let n = a.len();
    let mut q = 0.0;
    let mut magnitude = 0.0;
    for j in 0..n {
        for i in 0..n {
            let t = a[i] * cov[(i, j)] * a[j];
            q += t;
            magnitude += t.abs();
        }
    }
    if q < -VARIANCE_CLAMP * magnitude.max(1.0) {
        return Err(Error::Conditioning(format!(
            "negative variance {q:e} from quadratic form"
        )));
    }
    Ok(q.max(0.0))
}

fn check_dims(dim_y: usize, post: &PosteriorGaussian) -> Result<()> {
    if post.dim() != dim_y {
        return Err(Error::shape(format!(
            "objective expects {dim_y} outputs, posterior has {}",
            post.dim()
        )));
    }
    Ok(())
}

/// Moments of `aᵀy + b` for Gaussian `y`: mean `aᵀm + b`, std `(aᵀΣa)^½`.
pub fn exact_linear_moments(
    lin: &LinearObjective,
    mean: &[f64],
    cov: &DMatrix<f64>,
) -> Result<MomentEstimate> {
    let n = lin.a.len();
    if mean.len() != n || cov.nrows() != n || cov.ncols() != n {
        return Err(Error::shape(format!(
            "linear objective has {n} coefficients, mean {} and covariance {}x{}",
            mean.len(),
            cov.nrows(),
            cov.ncols()
        )));
    }
    let m = lin.a.iter().zip(mean).map(|(a, m)| a * m).sum::<f64>() + lin.b;
    let var = quadratic_form(&lin.a, cov)?;
    Ok(MomentEstimate {
        mean: m,
        std: var.sqrt(),
        engine: Engine::ExactLinear,
        meta: MomentMeta::None,
    })
}

/// Sample mean and unbiased sample standard deviation of `f(x, y_s)` over
/// `samples` posterior draws.
pub fn mc_moments(
    obj: &dyn CompositeObjective,
    x: &[f64],
    post: &PosteriorGaussian,
    samples: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    check_dims(obj.dim_y(), post)?;
    if samples < 2 {
        return Err(Error::config("Monte Carlo needs at least 2 samples"));
    }
    let sampler = GaussianSampler::new(post)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = obj.g(x);
    let n = post.dim();
    let mut z = vec![0.0; n];
    let mut y = vec![0.0; n];
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for s in 0..samples {
        sampler.draw_into(&mut rng, &mut z, &mut y);
        let f = g + obj.h(x, &y);
        if !f.is_finite() {
            return Err(Error::Evaluation {
                message: format!("f = {f} at Monte Carlo sample {s}"),
                at: y,
            });
        }
        let delta = f - mean;
        mean += delta / (s + 1) as f64;
        m2 += delta * (f - mean);
    }
    Ok(MomentEstimate {
        mean,
        std: (m2 / (samples - 1) as f64).max(0.0).sqrt(),
        engine: Engine::MonteCarlo,
        meta: MomentMeta::Samples(samples),
    })
}

/// `∇_y h(x, y0)`: the analytic gradient when the objective provides one,
/// otherwise central differences with step `FD_STEP · max(|y0_i|, 1)`.
pub fn jacobian_y(obj: &dyn CompositeObjective, x: &[f64], y0: &[f64]) -> Result<Vec<f64>> {
    if y0.len() != obj.dim_y() {
        return Err(Error::shape(format!(
            "objective expects {} outputs, got {}",
            obj.dim_y(),
            y0.len()
        )));
    }
    if let Some(j) = obj.grad_h_y(x, y0) {
        if j.len() != y0.len() {
            return Err(Error::shape("analytic gradient has the wrong length"));
        }
        if j.iter().any(|v| !v.is_finite()) {
            return Err(Error::Evaluation {
                message: "non-finite analytic gradient".into(),
                at: y0.to_vec(),
            });
        }
        return Ok(j);
    }
    jacobian_fd(obj, x, y0)
}

/// Central-difference Jacobian, ignoring any analytic gradient.
pub fn jacobian_fd(obj: &dyn CompositeObjective, x: &[f64], y0: &[f64]) -> Result<Vec<f64>> {
    let mut probe = y0.to_vec();
    let mut jac = Vec::with_capacity(y0.len());
    for i in 0..y0.len() {
        let step = FD_STEP * y0[i].abs().max(1.0);
        probe[i] = y0[i] + step;
        let up = obj.h(x, &probe);
        probe[i] = y0[i] - step;
        let down = obj.h(x, &probe);
        probe[i] = y0[i];
        if !(up.is_finite() && down.is_finite()) {
            probe[i] += step;
            return Err(Error::Evaluation {
                message: format!("non-finite h while differencing component {i}"),
                at: probe,
            });
        }
        jac.push((up - down) / (2.0 * step));
    }
    Ok(jac)
}

/// Linearized moments of `f(x, y)` for Gaussian `y`.
///
/// `h` is expanded to first order around the reference `ŷ₀` chosen by
/// `policy`, giving mean `g(x) + h(x, ŷ₀) + Jᵀ(ŷ - ŷ₀)` and std `(JᵀΣ̂J)^½`.
/// Costs one evaluation of `h` plus one Jacobian.
pub fn bois_moments(
    obj: &dyn CompositeObjective,
    x: &[f64],
    post: &PosteriorGaussian,
    policy: ReferencePolicy,
) -> Result<MomentEstimate> {
    check_dims(obj.dim_y(), post)?;
    policy.validate()?;
    let y_hat = post.mean().as_slice();
    let y_ref = policy.reference(y_hat);
    let jac = jacobian_y(obj, x, &y_ref)?;
    let h_ref = obj.h(x, &y_ref);
    if !h_ref.is_finite() {
        return Err(Error::Evaluation {
            message: format!("h = {h_ref} at the reference point"),
            at: y_ref,
        });
    }
    let j_hat: f64 = jac.iter().zip(y_hat).map(|(a, b)| a * b).sum();
    let j_ref: f64 = jac.iter().zip(&y_ref).map(|(a, b)| a * b).sum();
    let mean = obj.g(x) + h_ref + (j_hat - j_ref);
    let var = quadratic_form(&jac, post.covariance())?;
    Ok(MomentEstimate {
        mean,
        std: var.sqrt(),
        engine: Engine::Bois,
        meta: MomentMeta::Reference(y_ref),
    })
}
