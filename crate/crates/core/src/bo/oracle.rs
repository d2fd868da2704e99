use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::CompositeObjective;

/// One expensive evaluation: intermediate outputs `y` (empty for a plain
/// black box) and the performance value `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub y: Vec<f64>,
    pub f: f64,
}

/// Additive Gaussian noise on the observed outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Per-output standard deviation (one entry for a black box).
    pub std: Vec<f64>,
    pub seed: u64,
}

pub type SystemFn = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;
type ObservationFn = Arc<dyn Fn(&[f64]) -> Result<Observation> + Send + Sync>;

#[derive(Clone)]
enum Source {
    Composite {
        system: SystemFn,
        objective: Arc<dyn CompositeObjective>,
    },
    Raw(ObservationFn),
}

/// The expensive system, with an evaluation counter.
pub struct Oracle {
    source: Source,
    dim_y: usize,
    noise: Option<(NoiseModel, Mutex<ChaCha8Rng>)>,
    count: AtomicUsize,
}

impl fmt::Debug for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Oracle")
            .field("dim_y", &self.dim_y)
            .field("evaluations", &self.eval_count())
            .finish()
    }
}

impl Oracle {
    /// `y = system(x)` and `f = g(x) + h(x, y)`.
    pub fn composite(system: SystemFn, objective: Arc<dyn CompositeObjective>) -> Self {
        let dim_y = objective.dim_y();
        Self {
            source: Source::Composite { system, objective },
            dim_y,
            noise: None,
            count: AtomicUsize::new(0),
        }
    }

    /// A plain black box returning only `f`.
    pub fn black_box(f: impl Fn(&[f64]) -> Result<f64> + Send + Sync + 'static) -> Self {
        Self::from_fn(0, move |x| {
            Ok(Observation {
                y: Vec::new(),
                f: f(x)?,
            })
        })
    }

    /// Arbitrary observation function producing `dim_y` outputs.
    pub fn from_fn(
        dim_y: usize,
        f: impl Fn(&[f64]) -> Result<Observation> + Send + Sync + 'static,
    ) -> Self {
        Self {
            source: Source::Raw(Arc::new(f)),
            dim_y,
            noise: None,
            count: AtomicUsize::new(0),
        }
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Result<Self> {
        let expected = self.dim_y.max(1);
        if noise.std.len() != expected {
            return Err(Error::config(format!(
                "noise model has {} entries, oracle needs {expected}",
                noise.std.len()
            )));
        }
        if noise.std.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::config("noise standard deviations must be nonnegative"));
        }
        if matches!(self.source, Source::Raw(_)) && self.dim_y > 0 {
            return Err(Error::config(
                "output noise needs a composite oracle so f can be recomputed from noisy y",
            ));
        }
        let rng = Mutex::new(ChaCha8Rng::seed_from_u64(noise.seed));
        self.noise = Some((noise, rng));
        Ok(self)
    }

    pub fn dim_y(&self) -> usize {
        self.dim_y
    }

    pub fn eval_count(&self) -> usize {
        self.count.load(Ordering::SeqCst)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Observation> {
        self.count.fetch_add(1, Ordering::SeqCst);
        match &self.source {
            Source::Composite { system, objective } => {
                let mut y = system(x)?;
                if y.len() != self.dim_y {
                    return Err(Error::shape(format!(
                        "system returned {} outputs, expected {}",
                        y.len(),
                        self.dim_y
                    )));
                }
                if let Some((noise, rng)) = &self.noise {
                    let mut rng = rng.lock().expect("noise rng poisoned");
                    for (v, s) in y.iter_mut().zip(&noise.std) {
                        let z: f64 = StandardNormal.sample(&mut *rng);
                        *v += s * z;
                    }
                }
                let f = objective.f(x, &y);
                Ok(Observation { y, f })
            }
            Source::Raw(func) => {
                let mut obs = func(x)?;
                if let Some((noise, rng)) = &self.noise {
                    let mut rng = rng.lock().expect("noise rng poisoned");
                    let z: f64 = StandardNormal.sample(&mut *rng);
                    obs.f += noise.std[0] * z;
                }
                Ok(obs)
            }
        }
    }
}
