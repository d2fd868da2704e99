//! Stationary covariance functions with per-dimension lengthscales.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    Matern12,
    Matern32,
    #[default]
    Matern52,
    SquaredExponential,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 4] = [
        KernelFamily::Matern12,
        KernelFamily::Matern32,
        KernelFamily::Matern52,
        KernelFamily::SquaredExponential,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Matern12 => "matern12",
            KernelFamily::Matern32 => "matern32",
            KernelFamily::Matern52 => "matern52",
            KernelFamily::SquaredExponential => "squared-exponential",
        }
    }

    /// Unit-variance correlation at scaled distance `r`.
    #[inline]
    pub fn correlation(self, r: f64) -> f64 {
        match self {
            KernelFamily::Matern12 => (-r).exp(),
            KernelFamily::Matern32 => {
                let s = 3f64.sqrt() * r;
                (1.0 + s) * (-s).exp()
            }
            KernelFamily::Matern52 => {
                let s = 5f64.sqrt() * r;
                (1.0 + s + s * s / 3.0) * (-s).exp()
            }
            KernelFamily::SquaredExponential => (-0.5 * r * r).exp(),
        }
    }

    /// `-(dc/dr) / r`, so that `dc/d(log l_j) = c'(r) s_j^2` where `s_j` is the
    /// scaled coordinate difference.
    #[inline]
    pub(crate) fn log_lengthscale_factor(self, r: f64) -> f64 {
        match self {
            KernelFamily::Matern12 => {
                if r > 0.0 {
                    (-r).exp() / r
                } else {
                    0.0
                }
            }
            KernelFamily::Matern32 => 3.0 * (-(3f64.sqrt()) * r).exp(),
            KernelFamily::Matern52 => {
                let s = 5f64.sqrt() * r;
                (5.0 / 3.0) * (1.0 + s) * (-s).exp()
            }
            KernelFamily::SquaredExponential => (-0.5 * r * r).exp(),
        }
    }
}

impl std::str::FromStr for KernelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        KernelFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config(format!("unknown kernel family '{s}'")))
    }
}

/// Kernel family plus hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl KernelSpec {
    pub fn new(
        family: KernelFamily,
        lengthscales: Vec<f64>,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        let spec = Self {
            family,
            lengthscales,
            signal_variance,
            noise_variance,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same lengthscale in every dimension.
    pub fn isotropic(
        family: KernelFamily,
        dim: usize,
        lengthscale: f64,
        signal_variance: f64,
        noise_variance: f64,
    ) -> Result<Self> {
        Self::new(family, vec![lengthscale; dim], signal_variance, noise_variance)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengthscales.is_empty() {
            return Err(Error::shape("kernel needs at least one lengthscale"));
        }
        if self.lengthscales.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::config("lengthscales must be positive and finite"));
        }
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::config("signal variance must be positive"));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::config("noise variance must be nonnegative"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    #[inline]
    pub(crate) fn scaled_distance(&self, x: &[f64], xp: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((a, b), l) in x.iter().zip(xp).zip(&self.lengthscales) {
            let s = (a - b) / l;
            acc += s * s;
        }
        acc.sqrt()
    }

    /// Covariance without shape checks; callers guarantee matching lengths.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], xp: &[f64]) -> f64 {
        self.signal_variance * self.family.correlation(self.scaled_distance(x, xp))
    }
}

/// `k(x, x')` for the given kernel. Noise is not included.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], xp: &[f64]) -> Result<f64> {
    let d = spec.dim();
    if x.len() != d || xp.len() != d {
        return Err(Error::shape(format!(
            "kernel has {d} lengthscales, points have dimensions {} and {}",
            x.len(),
            xp.len()
        )));
    }
    Ok(spec.eval_unchecked(x, xp))
}
