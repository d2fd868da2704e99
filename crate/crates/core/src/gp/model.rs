use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::domain::Dataset;
use crate::error::{Error, Result};
use crate::gp::kernel::KernelSpec;
use crate::gp::posterior::PosteriorGaussian;

/// First jitter level, relative to the signal variance.
pub const JITTER_START: f64 = 1e-10;
/// Last jitter level tried before giving up.
pub const JITTER_MAX: f64 = 1e-4;

/// Affine maps between user coordinates and the coordinates the kernel sees.
///
/// Inputs are mapped as `(x - x_offset) / x_scale`, outputs as
/// `(y - y_mean) / y_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub x_offset: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_mean: f64,
    pub y_scale: f64,
}

impl Standardization {
    pub fn identity(dim: usize) -> Self {
        Self {
            x_offset: vec![0.0; dim],
            x_scale: vec![1.0; dim],
            y_mean: 0.0,
            y_scale: 1.0,
        }
    }

    #[inline]
    pub fn map_input_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (x[i] - self.x_offset[i]) / self.x_scale[i];
        }
    }

    pub fn map_input(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.map_input_into(x, &mut out);
        out
    }
}

/// Cholesky factor of `gram + jitter * I`, escalating the jitter by ×10 from
/// `JITTER_START * scale` up to `JITTER_MAX * scale`.
pub(crate) fn factor_with_jitter(gram: &DMatrix<f64>, scale: f64) -> Option<(DMatrix<f64>, f64)> {
    let mut rel = JITTER_START;
    while rel <= JITTER_MAX * 1.000_001 {
        let jitter = rel * scale;
        let mut m = gram.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(ch) = m.cholesky() {
            return Some((ch.unpack(), jitter));
        }
        rel *= 10.0;
    }
    None
}

/// Solve `L v = b` in place for lower-triangular `L`.
#[inline]
pub(crate) fn forward_substitute(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = b.len();
    for i in 0..n {
        let mut acc = b[i];
        for k in 0..i {
            acc -= l[(i, k)] * b[k];
        }
        b[i] = acc / l[(i, i)];
    }
}

/// A Gaussian process conditioned on a single-output dataset.
///
/// Immutable once built; prediction only reads the cached factorization.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: KernelSpec,
    standardization: Standardization,
    data: Dataset,
    // Inputs in kernel coordinates, one row each.
    z: Vec<Vec<f64>>,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    jitter: f64,
}

impl GpModel {
    /// Condition a zero-mean GP with fixed hyperparameters on raw data.
    pub fn condition(kernel: KernelSpec, data: &Dataset) -> Result<Self> {
        Self::condition_standardized(kernel, data, Standardization::identity(data.dim_x()))
    }

    /// Condition after applying `standardization` to inputs and outputs.
    /// `kernel` is interpreted in the standardized coordinates.
    pub fn condition_standardized(
        kernel: KernelSpec,
        data: &Dataset,
        standardization: Standardization,
    ) -> Result<Self> {
        kernel.validate()?;
        if data.dim_y() != 1 {
            return Err(Error::shape(format!(
                "single-output GP given {} outputs",
                data.dim_y()
            )));
        }
        if data.dim_x() != kernel.dim() {
            return Err(Error::shape(format!(
                "kernel has {} lengthscales, data has dimension {}",
                kernel.dim(),
                data.dim_x()
            )));
        }
        let n = data.len();
        let z: Vec<Vec<f64>> = data
            .inputs()
            .iter()
            .map(|x| standardization.map_input(x))
            .collect();
        let targets = DVector::from_iterator(
            n,
            data.outputs()
                .iter()
                .map(|r| (r[0] - standardization.y_mean) / standardization.y_scale),
        );
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let k = kernel.eval_unchecked(&z[i], &z[j]);
                gram[(i, j)] = k;
                gram[(j, i)] = k;
            }
            gram[(i, i)] += kernel.noise_variance;
        }
        let (chol, jitter) = factor_with_jitter(&gram, kernel.signal_variance).ok_or_else(|| {
            Error::Conditioning(format!(
                "gram matrix of {n} points not positive definite even with jitter {:e}",
                JITTER_MAX * kernel.signal_variance
            ))
        })?;
        let mut alpha = targets;
        let mut tmp = alpha.as_mut_slice().to_vec();
        forward_substitute(&chol, &mut tmp);
        backward_substitute_transpose(&chol, &mut tmp);
        alpha.copy_from_slice(&tmp);
        Ok(Self {
            kernel,
            standardization,
            data: data.clone(),
            z,
            chol,
            alpha,
            jitter,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn standardization(&self) -> &Standardization {
        &self.standardization
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    /// Jitter that was added to the diagonal to make the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower-triangular `L` with `L Lᵀ = K + (noise + jitter) I`.
    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// Log marginal likelihood of the standardized targets.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.z.len() as f64;
        let targets: Vec<f64> = self
            .data
            .outputs()
            .iter()
            .map(|r| (r[0] - self.standardization.y_mean) / self.standardization.y_scale)
            .collect();
        let fit: f64 = targets.iter().zip(self.alpha.iter()).map(|(y, a)| y * a).sum();
        let logdet: f64 = (0..self.chol.nrows()).map(|i| self.chol[(i, i)].ln()).sum();
        -0.5 * fit - logdet - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }

    /// Posterior mean and variance of the latent function at one point.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.dim() {
            return Err(Error::shape(format!(
                "query has dimension {}, model has {}",
                x.len(),
                self.dim()
            )));
        }
        let mut zq = vec![0.0; x.len()];
        let mut kq = vec![0.0; self.z.len()];
        Ok(self.predict_with(x, &mut zq, &mut kq))
    }

    /// `predict` with caller-provided scratch space.
    #[inline]
    pub(crate) fn predict_with(&self, x: &[f64], zq: &mut [f64], kq: &mut [f64]) -> (f64, f64) {
        self.standardization.map_input_into(x, zq);
        let mut mean = 0.0;
        for (i, zi) in self.z.iter().enumerate() {
            let k = self.kernel.eval_unchecked(zq, zi);
            kq[i] = k;
            mean += k * self.alpha[i];
        }
        forward_substitute(&self.chol, kq);
        let explained: f64 = kq.iter().map(|v| v * v).sum();
        let var = (self.kernel.signal_variance - explained).max(0.0);
        let s = &self.standardization;
        (s.y_mean + s.y_scale * mean, s.y_scale * s.y_scale * var)
    }

    /// Joint posterior over `queries`, computed from the cached factor.
    pub fn posterior(&self, queries: &[Vec<f64>]) -> Result<PosteriorGaussian> {
        let m = queries.len();
        if let Some(q) = queries.iter().find(|q| q.len() != self.dim()) {
            return Err(Error::shape(format!(
                "query has dimension {}, model has {}",
                q.len(),
                self.dim()
            )));
        }
        let n = self.z.len();
        let zq: Vec<Vec<f64>> = queries
            .iter()
            .map(|q| self.standardization.map_input(q))
            .collect();
        let mut cross = DMatrix::zeros(n, m);
        for (j, q) in zq.iter().enumerate() {
            for (i, zi) in self.z.iter().enumerate() {
                cross[(i, j)] = self.kernel.eval_unchecked(q, zi);
            }
        }
        let mean = cross.transpose() * &self.alpha;
        let v = self
            .chol
            .solve_lower_triangular(&cross)
            .ok_or_else(|| Error::Conditioning("singular cholesky factor".into()))?;
        let mut cov = DMatrix::zeros(m, m);
        for a in 0..m {
            for b in 0..=a {
                cov[(a, b)] = self.kernel.eval_unchecked(&zq[a], &zq[b]);
            }
        }
        let explained = v.transpose() * &v;
        for a in 0..m {
            for b in 0..=a {
                let c = cov[(a, b)] - 0.5 * (explained[(a, b)] + explained[(b, a)]);
                cov[(a, b)] = c;
                cov[(b, a)] = c;
            }
        }
        let s = &self.standardization;
        let mean = mean.map(|v| s.y_mean + s.y_scale * v);
        let cov = cov * (s.y_scale * s.y_scale);
        Ok(PosteriorGaussian::new(mean, cov))
    }
}

/// Solve `Lᵀ v = b` in place for lower-triangular `L`.
pub(crate) fn backward_substitute_transpose(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = b.len();
    for i in (0..n).rev() {
        let mut acc = b[i];
        for k in i + 1..n {
            acc -= l[(k, i)] * b[k];
        }
        b[i] = acc / l[(i, i)];
    }
}
