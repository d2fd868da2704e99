use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::gp::model::factor_with_jitter;

/// Multivariate normal over `n` query values (or over the `d_y` outputs of a
/// bank at one point).
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGaussian {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
}

impl PosteriorGaussian {
    /// # Panics
    /// If `covariance` is not square with the same size as `mean`.
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Self {
        assert_eq!(covariance.nrows(), mean.len());
        assert_eq!(covariance.ncols(), mean.len());
        Self { mean, covariance }
    }

    /// Independent components with the given variances.
    pub fn diagonal(mean: Vec<f64>, variances: Vec<f64>) -> Self {
        let cov = DMatrix::from_diagonal(&DVector::from_vec(variances));
        Self::new(DVector::from_vec(mean), cov)
    }

    /// Degenerate distribution concentrated at `mean`.
    pub fn point(mean: Vec<f64>) -> Self {
        let n = mean.len();
        Self::new(DVector::from_vec(mean), DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.covariance[(i, i)]
    }

    pub fn std(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }

    fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| i == j || self.covariance[(i, j)] == 0.0))
    }
}

/// Draws `m + A z` with `A Aᵀ = Σ`; factorizes once.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    mean: Vec<f64>,
    factor: Factor,
}

#[derive(Debug, Clone)]
enum Factor {
    Diagonal(Vec<f64>),
    Lower(DMatrix<f64>),
}

impl GaussianSampler {
    pub fn new(post: &PosteriorGaussian) -> Result<Self> {
        let mean = post.mean.as_slice().to_vec();
        let n = post.dim();
        let factor = if post.is_diagonal() {
            let mut sd = Vec::with_capacity(n);
            for i in 0..n {
                let v = post.covariance[(i, i)];
                if v < 0.0 && v < -1e-12 * (1.0 + post.mean[i].abs()) {
                    return Err(Error::Conditioning(format!(
                        "negative variance {v:e} in component {i}"
                    )));
                }
                sd.push(v.max(0.0).sqrt());
            }
            Factor::Diagonal(sd)
        } else {
            let scale = (0..n).map(|i| post.covariance[(i, i)]).fold(0.0, f64::max);
            let sym = 0.5 * (&post.covariance + post.covariance.transpose());
            let (l, _) = factor_with_jitter(&sym, scale).ok_or_else(|| {
                Error::Conditioning("posterior covariance is not positive semidefinite".into())
            })?;
            Factor::Lower(l)
        };
        Ok(Self { mean, factor })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Fill `out` with one draw; `z` is scratch of the same length.
    #[inline]
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, z: &mut [f64], out: &mut [f64]) {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        match &self.factor {
            Factor::Diagonal(sd) => {
                for i in 0..out.len() {
                    out[i] = self.mean[i] + sd[i] * z[i];
                }
            }
            Factor::Lower(l) => {
                for i in 0..out.len() {
                    let mut acc = self.mean[i];
                    for k in 0..=i {
                        acc += l[(i, k)] * z[k];
                    }
                    out[i] = acc;
                }
            }
        }
    }
}

/// `count` draws from `post`, reproducible for a given `seed`.
pub fn sample_posterior(post: &PosteriorGaussian, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let sampler = GaussianSampler::new(post)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sampler.dim();
    let mut z = vec![0.0; n];
    Ok((0..count)
        .map(|_| {
            let mut out = vec![0.0; n];
            sampler.draw_into(&mut rng, &mut z, &mut out);
            out
        })
        .collect())
}
