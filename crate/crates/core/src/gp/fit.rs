//! Hyperparameter selection by maximum log marginal likelihood.
//!
//! Parameters are optimized in log space. Box bounds are enforced by a
//! sigmoid reparameterization so an unconstrained BFGS iteration can be used;
//! gradients of the likelihood are analytic.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{BoxDomain, Dataset};
use crate::error::{Error, Result};
use crate::gp::kernel::{KernelFamily, KernelSpec};
use crate::gp::model::{factor_with_jitter, GpModel, Standardization};

/// How the observation-noise variance is chosen.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum NoiseMode {
    /// Learned within `[min, max]` (standardized output units).
    Learned { min: f64, max: f64 },
    /// Held at this value (standardized output units).
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub restarts: usize,
    pub seed: u64,
    pub lengthscale_bounds: (f64, f64),
    pub signal_bounds: (f64, f64),
    pub noise: NoiseMode,
    /// Used to map inputs onto the unit cube. Without it the data range is used.
    pub domain: Option<BoxDomain>,
    /// Standardized-space hyperparameters used as the first start.
    pub warm_start: Option<KernelSpec>,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            seed: 0,
            lengthscale_bounds: (1e-3, 1e3),
            signal_bounds: (1e-3, 1e3),
            noise: NoiseMode::Learned {
                min: 1e-8,
                max: 1e-1,
            },
            domain: None,
            warm_start: None,
            max_iterations: 100,
        }
    }
}

impl FitOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_domain(mut self, domain: BoxDomain) -> Self {
        self.domain = Some(domain);
        self
    }
}

pub(crate) fn standardization_for(data: &Dataset, domain: Option<&BoxDomain>) -> Standardization {
    let dx = data.dim_x();
    let (x_offset, x_scale) = match domain {
        Some(d) => (d.lower().to_vec(), (0..dx).map(|i| d.width(i)).collect()),
        None => {
            let mut lo = vec![f64::INFINITY; dx];
            let mut hi = vec![f64::NEG_INFINITY; dx];
            for x in data.inputs() {
                for i in 0..dx {
                    lo[i] = lo[i].min(x[i]);
                    hi[i] = hi[i].max(x[i]);
                }
            }
            let scale = lo
                .iter()
                .zip(&hi)
                .map(|(l, h)| if h > l { h - l } else { 1.0 })
                .collect();
            (lo, scale)
        }
    };
    let ys: Vec<f64> = data.outputs().iter().map(|r| r[0]).collect();
    let n = ys.len() as f64;
    let y_mean = ys.iter().sum::<f64>() / n;
    let var = ys.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n;
    let y_scale = if var.sqrt() > 1e-12 * (1.0 + y_mean.abs()) {
        var.sqrt()
    } else {
        1.0
    };
    Standardization {
        x_offset,
        x_scale,
        y_mean,
        y_scale,
    }
}

/// Precomputed standardized data for repeated likelihood evaluations.
struct Problem {
    family: KernelFamily,
    z: Vec<Vec<f64>>,
    y: Vec<f64>,
    learn_noise: bool,
    fixed_noise: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Problem {
    fn dim_x(&self) -> usize {
        self.z[0].len()
    }

    /// Log-space parameters `[log l_1.., log s2, (log noise)]` to a kernel.
    fn kernel(&self, p: &[f64]) -> KernelSpec {
        let d = self.dim_x();
        KernelSpec {
            family: self.family,
            lengthscales: p[..d].iter().map(|v| v.exp()).collect(),
            signal_variance: p[d].exp(),
            noise_variance: if self.learn_noise {
                p[d + 1].exp()
            } else {
                self.fixed_noise
            },
        }
    }

    fn to_constrained(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut p = Vec::with_capacity(u.len());
        let mut dp = Vec::with_capacity(u.len());
        for (i, ui) in u.iter().enumerate() {
            let s = 1.0 / (1.0 + (-ui).exp());
            let w = self.upper[i] - self.lower[i];
            p.push(self.lower[i] + w * s);
            dp.push(w * s * (1.0 - s));
        }
        (p, dp)
    }

    fn to_unconstrained(&self, p: &[f64]) -> Vec<f64> {
        p.iter()
            .enumerate()
            .map(|(i, v)| {
                let t = ((v - self.lower[i]) / (self.upper[i] - self.lower[i])).clamp(1e-6, 1.0 - 1e-6);
                (t / (1.0 - t)).ln()
            })
            .collect()
    }

    /// Negative log marginal likelihood and its gradient w.r.t. log parameters.
    fn nll_grad(&self, p: &[f64]) -> Option<(f64, Vec<f64>)> {
        let k = self.kernel(p);
        let n = self.z.len();
        let d = self.dim_x();
        let mut gram = DMatrix::zeros(n, n);
        let mut corr = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                let c = self.family.correlation(k.scaled_distance(&self.z[i], &self.z[j]));
                corr[(i, j)] = c;
                corr[(j, i)] = c;
                gram[(i, j)] = k.signal_variance * c;
                gram[(j, i)] = k.signal_variance * c;
            }
            corr[(i, i)] = 1.0;
            gram[(i, i)] = k.signal_variance + k.noise_variance;
        }
        let (l, _) = factor_with_jitter(&gram, k.signal_variance)?;
        let chol = nalgebra::Cholesky::pack_dirty(l);
        let alpha = chol.solve(&nalgebra::DVector::from_column_slice(&self.y));
        let logdet: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum();
        let fit: f64 = self.y.iter().zip(alpha.iter()).map(|(a, b)| a * b).sum();
        let nll = 0.5 * fit + logdet + 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
        if !nll.is_finite() {
            return None;
        }
        // W = K^-1 - alpha alpha^T; d nll / d theta = 0.5 tr(W dK/dtheta)
        let mut w = chol.inverse();
        for j in 0..n {
            for i in 0..n {
                w[(i, j)] -= alpha[i] * alpha[j];
            }
        }
        let mut grad = vec![0.0; p.len()];
        let mut sig = 0.0;
        for i in 0..n {
            sig += 0.5 * w[(i, i)] * k.signal_variance;
            for j in 0..i {
                let wij = w[(i, j)];
                // off-diagonal pairs appear twice in the trace
                sig += wij * k.signal_variance * corr[(i, j)];
                let r = k.scaled_distance(&self.z[i], &self.z[j]);
                let factor = self.family.log_lengthscale_factor(r) * k.signal_variance * wij;
                for (a, g) in grad[..d].iter_mut().enumerate() {
                    let s = (self.z[i][a] - self.z[j][a]) / k.lengthscales[a];
                    *g += factor * s * s;
                }
            }
        }
        grad[d] = sig;
        if self.learn_noise {
            let tr: f64 = (0..n).map(|i| w[(i, i)]).sum();
            grad[d + 1] = 0.5 * k.noise_variance * tr;
        }
        Some((nll, grad))
    }

    fn objective(&self, u: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (p, dp) = self.to_constrained(u);
        let (v, g) = self.nll_grad(&p)?;
        Some((v, g.iter().zip(&dp).map(|(a, b)| a * b).collect()))
    }
}

/// BFGS with backtracking line search. Returns the best point seen.
fn bfgs(problem: &Problem, start: Vec<f64>, max_iterations: usize) -> Option<(Vec<f64>, f64)> {
    let n = start.len();
    let (mut fx, mut gx) = problem.objective(&start)?;
    let mut x = start;
    let mut h = DMatrix::<f64>::identity(n, n);
    for _ in 0..max_iterations {
        let gnorm = gx.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < 1e-6 {
            break;
        }
        let g = nalgebra::DVector::from_column_slice(&gx);
        let mut dir = -(&h * &g);
        let mut slope = dir.dot(&g);
        if slope >= 0.0 {
            h = DMatrix::identity(n, n);
            dir = -g.clone();
            slope = -gnorm * gnorm;
        }
        // keep steps in the unconstrained space moderate
        let dnorm = dir.norm();
        if dnorm > 5.0 {
            dir *= 5.0 / dnorm;
            slope *= 5.0 / dnorm;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, b)| a + step * b).collect();
            if let Some((ft, gt)) = problem.objective(&trial) {
                if ft <= fx + 1e-4 * step * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gnew)) = accepted else {
            break;
        };
        let s = nalgebra::DVector::from_iterator(n, xn.iter().zip(&x).map(|(a, b)| a - b));
        let yv = nalgebra::DVector::from_iterator(n, gnew.iter().zip(&gx).map(|(a, b)| a - b));
        let sy = s.dot(&yv);
        let improvement = fx - fnew;
        x = xn;
        gx = gnew;
        fx = fnew;
        if sy > 1e-12 {
            let rho = 1.0 / sy;
            let i = DMatrix::<f64>::identity(n, n);
            let a = &i - rho * &s * yv.transpose();
            let b = &i - rho * &yv * s.transpose();
            h = &a * &h * &b + rho * &s * s.transpose();
        }
        if improvement.abs() < 1e-10 * (1.0 + fx.abs()) {
            break;
        }
    }
    Some((x, fx))
}

/// Default standardized-space hyperparameters, used when the data are too
/// few to fit and as the first optimizer start.
pub fn default_kernel(family: KernelFamily, dim: usize, noise: NoiseMode) -> KernelSpec {
    let noise_variance = match noise {
        NoiseMode::Fixed(v) => v,
        NoiseMode::Learned { min, max } => (1e-6f64).clamp(min, max),
    };
    KernelSpec {
        family,
        lengthscales: vec![0.5; dim],
        signal_variance: 1.0,
        noise_variance,
    }
}

/// Fit a single-output GP: standardize, maximize the log marginal likelihood
/// over lengthscales, signal variance and (optionally) noise variance from
/// `options.restarts` starts, then condition on the data.
///
/// With a single observation there is nothing to fit; the default
/// hyperparameters are used.
pub fn fit(data: &Dataset, family: KernelFamily, options: &FitOptions) -> Result<GpModel> {
    if data.dim_y() != 1 {
        return Err(Error::shape(format!(
            "fit expects one output column, got {}",
            data.dim_y()
        )));
    }
    if let Some(d) = &options.domain {
        if d.dim() != data.dim_x() {
            return Err(Error::shape("fit domain dimension differs from data"));
        }
    }
    if let NoiseMode::Learned { min, max } = options.noise {
        if !(min > 0.0 && max >= min) {
            return Err(Error::config("noise bounds must satisfy 0 < min <= max"));
        }
    }
    let standardization = standardization_for(data, options.domain.as_ref());
    let dx = data.dim_x();
    if data.len() < 2 {
        let kernel = default_kernel(family, dx, options.noise);
        return GpModel::condition_standardized(kernel, data, standardization);
    }

    let (learn_noise, fixed_noise) = match options.noise {
        NoiseMode::Learned { .. } => (true, 0.0),
        NoiseMode::Fixed(v) => (false, v),
    };
    let mut lower = vec![options.lengthscale_bounds.0.ln(); dx];
    let mut upper = vec![options.lengthscale_bounds.1.ln(); dx];
    lower.push(options.signal_bounds.0.ln());
    upper.push(options.signal_bounds.1.ln());
    if let NoiseMode::Learned { min, max } = options.noise {
        lower.push(min.ln());
        upper.push(max.ln() + if max > min { 0.0 } else { 1e-12 });
    }
    let problem = Problem {
        family,
        z: data.inputs().iter().map(|x| standardization.map_input(x)).collect(),
        y: data
            .outputs()
            .iter()
            .map(|r| (r[0] - standardization.y_mean) / standardization.y_scale)
            .collect(),
        learn_noise,
        fixed_noise,
        lower,
        upper,
    };

    let to_log = |k: &KernelSpec| -> Vec<f64> {
        let mut p: Vec<f64> = k.lengthscales.iter().map(|l| l.ln()).collect();
        p.push(k.signal_variance.ln());
        if learn_noise {
            p.push(k.noise_variance.max(1e-300).ln());
        }
        p
    };

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut starts = Vec::with_capacity(options.restarts.max(1));
    let first = options
        .warm_start
        .clone()
        .filter(|k| k.dim() == dx && k.family == family)
        .unwrap_or_else(|| default_kernel(family, dx, options.noise));
    starts.push(to_log(&first));
    while starts.len() < options.restarts.max(1) {
        let mut p: Vec<f64> = (0..dx)
            .map(|_| rng.gen_range((0.05f64).ln()..(5.0f64).ln()))
            .collect();
        p.push(rng.gen_range((0.2f64).ln()..(5.0f64).ln()));
        if let NoiseMode::Learned { min, max } = options.noise {
            p.push(rng.gen_range(min.ln()..=max.ln()));
        }
        starts.push(p);
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let u0 = problem.to_unconstrained(&start);
        if let Some((u, v)) = bfgs(&problem, u0, options.max_iterations) {
            if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
                best = Some((u, v));
            }
        }
    }
    let (u, _) = best.ok_or_else(|| {
        Error::Conditioning("likelihood could not be evaluated at any start".into())
    })?;
    let (p, _) = problem.to_constrained(&u);
    GpModel::condition_standardized(problem.kernel(&p), data, standardization)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem_for(family: KernelFamily) -> Problem {
        let z = vec![
            vec![0.0, 0.1],
            vec![0.3, 0.9],
            vec![0.7, 0.4],
            vec![1.0, 0.2],
            vec![0.5, 0.5],
        ];
        let y = vec![0.3, -1.0, 0.8, 1.2, -0.2];
        Problem {
            family,
            z,
            y,
            learn_noise: true,
            fixed_noise: 0.0,
            lower: vec![-7.0; 4],
            upper: vec![7.0; 4],
        }
    }

    #[test]
    fn likelihood_gradient_matches_finite_differences() {
        for family in KernelFamily::ALL {
            let prob = problem_for(family);
            let p = vec![(0.4f64).ln(), (0.8f64).ln(), (1.3f64).ln(), (0.01f64).ln()];
            let (_, g) = prob.nll_grad(&p).unwrap();
            for i in 0..p.len() {
                let h = 1e-6;
                let mut a = p.clone();
                let mut b = p.clone();
                a[i] += h;
                b[i] -= h;
                let fd = (prob.nll_grad(&a).unwrap().0 - prob.nll_grad(&b).unwrap().0) / (2.0 * h);
                assert!(
                    (fd - g[i]).abs() < 1e-5 * (1.0 + fd.abs()),
                    "{family:?} param {i}: analytic {} vs fd {fd}",
                    g[i]
                );
            }
        }
    }

    #[test]
    fn fit_is_deterministic_given_seed() {
        let xs: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * 0.25]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x[0] - 1.0).collect();
        let data = Dataset::scalar(xs, ys).unwrap();
        let opts = FitOptions::default().with_seed(9);
        let a = fit(&data, KernelFamily::Matern52, &opts).unwrap();
        let b = fit(&data, KernelFamily::Matern52, &opts).unwrap();
        assert_eq!(a.kernel(), b.kernel());
    }

    #[test]
    fn single_point_uses_defaults() {
        let data = Dataset::scalar(vec![vec![0.2, 0.4]], vec![5.0]).unwrap();
        let m = fit(&data, KernelFamily::Matern32, &FitOptions::default()).unwrap();
        let (mean, _) = m.predict(&[0.2, 0.4]).unwrap();
        assert!((mean - 5.0).abs() < 1e-6);
    }
}
