use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::PosteriorGaussian;
use crate::moments::engines::{
    bois_moments, exact_linear_moments, mc_moments, MomentEstimate, ReferencePolicy,
};
use crate::moments::objective::CompositeObjective;
use crate::seeds;

/// Which moment engine to use and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "engine")]
pub enum EngineConfig {
    ExactLinear,
    MonteCarlo { samples: usize, seed: u64 },
    Bois { policy: ReferencePolicy },
}

/// Engine bound to an objective. Every call within one stream reuses the
/// same Monte Carlo seed, so the estimate is a deterministic function of
/// the posterior.
#[derive(Clone)]
pub struct MomentEvaluator {
    config: EngineConfig,
    objective: Arc<dyn CompositeObjective>,
    stream: u64,
}

impl std::fmt::Debug for MomentEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MomentEvaluator")
            .field("config", &self.config)
            .field("stream", &self.stream)
            .finish()
    }
}

pub fn moment_engine(
    config: &EngineConfig,
    objective: Arc<dyn CompositeObjective>,
) -> Result<MomentEvaluator> {
    match config {
        EngineConfig::ExactLinear if objective.as_linear().is_none() => {
            return Err(Error::config(
                "the exact-linear engine needs an objective that is affine in y",
            ))
        }
        EngineConfig::MonteCarlo { samples, .. } if *samples < 2 => {
            return Err(Error::config("monte-carlo engine needs samples >= 2"))
        }
        EngineConfig::Bois { policy } => policy.validate()?,
        _ => {}
    }
    Ok(MomentEvaluator {
        config: config.clone(),
        objective,
        stream: 0,
    })
}

impl MomentEvaluator {
    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn objective(&self) -> &dyn CompositeObjective {
        self.objective.as_ref()
    }

    /// Copy of this evaluator drawing from seed stream `stream`.
    pub fn with_stream(&self, stream: u64) -> Self {
        Self {
            stream,
            ..self.clone()
        }
    }

    pub fn evaluate(&self, x: &[f64], post: &PosteriorGaussian) -> Result<MomentEstimate> {
        match &self.config {
            EngineConfig::ExactLinear => {
                let lin = self
                    .objective
                    .as_linear()
                    .ok_or_else(|| Error::config("objective is not linear"))?;
                exact_linear_moments(lin, post.mean().as_slice(), post.covariance())
            }
            EngineConfig::MonteCarlo { samples, seed } => {
                let call_seed = seeds::derive(*seed, &[self.stream]);
                mc_moments(self.objective.as_ref(), x, post, *samples, call_seed)
            }
            EngineConfig::Bois { policy } => {
                bois_moments(self.objective.as_ref(), x, post, *policy)
            }
        }
    }
}
