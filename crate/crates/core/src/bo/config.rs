use serde::{Deserialize, Serialize};

use crate::acquisition::{AcquisitionSpec, SearchBudget};
use crate::bo::design::InitialDesign;
use crate::error::{Error, Result};
use crate::gp::{KernelFamily, NoiseMode};
use crate::moments::ReferencePolicy;

/// Which optimizer variant to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// GP fitted directly on observed `f`.
    Sbo,
    /// GP bank on `y`, Monte Carlo moments of `f`.
    Mcbo,
    /// GP bank on `y`, linearized moments of `f`.
    Bois,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Sbo, Variant::Mcbo, Variant::Bois];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Sbo => "sbo",
            Variant::Mcbo => "mcbo",
            Variant::Bois => "bois",
        }
    }

    pub fn is_composite(self) -> bool {
        !matches!(self, Variant::Sbo)
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::config(format!("unknown variant '{s}' (expected sbo, mcbo or bois)")))
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoConfig {
    pub variant: Variant,
    /// Number of acquisition-driven evaluations after the initial design.
    pub iterations: usize,
    #[serde(default)]
    pub initial_design: InitialDesign,
    #[serde(default)]
    pub acquisition: AcquisitionSpec,
    /// Monte Carlo samples per moment estimate (mcbo).
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    /// Linearization reference (bois).
    #[serde(default)]
    pub policy: ReferencePolicy,
    #[serde(default)]
    pub kernel: KernelFamily,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub search: SearchBudget,
    /// Likelihood restarts for the first fit.
    #[serde(default = "default_fit_restarts")]
    pub fit_restarts: usize,
    /// Restarts for later fits, which also start from the previous optimum.
    #[serde(default = "default_refit_restarts")]
    pub refit_restarts: usize,
    /// Hyperparameters are refitted at every iteration below this one...
    #[serde(default = "default_refit_until")]
    pub refit_until: usize,
    /// ...and every `refit_every` iterations after it.
    #[serde(default = "default_refit_every")]
    pub refit_every: usize,
    #[serde(default = "default_noise")]
    pub noise: NoiseMode,
}

fn default_mc_samples() -> usize {
    256
}
fn default_fit_restarts() -> usize {
    8
}
fn default_refit_restarts() -> usize {
    2
}
fn default_refit_until() -> usize {
    25
}
fn default_refit_every() -> usize {
    5
}
fn default_noise() -> NoiseMode {
    NoiseMode::Learned { min: 1e-8, max: 1e-1 }
}

impl BoConfig {
    pub fn new(variant: Variant, iterations: usize) -> Self {
        Self {
            variant,
            iterations,
            initial_design: InitialDesign::default(),
            acquisition: AcquisitionSpec::default(),
            mc_samples: default_mc_samples(),
            policy: ReferencePolicy::default(),
            kernel: KernelFamily::default(),
            seed: 0,
            search: SearchBudget::default(),
            fit_restarts: default_fit_restarts(),
            refit_restarts: default_refit_restarts(),
            refit_until: default_refit_until(),
            refit_every: default_refit_every(),
            noise: default_noise(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_initial_design(mut self, design: InitialDesign) -> Self {
        self.initial_design = design;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.acquisition.validate()?;
        self.search.validate()?;
        self.policy.validate()?;
        if self.variant == Variant::Mcbo && self.mc_samples < 2 {
            return Err(Error::config("mc_samples must be at least 2"));
        }
        if self.fit_restarts == 0 || self.refit_restarts == 0 {
            return Err(Error::config("fit restarts must be at least 1"));
        }
        if self.refit_every == 0 {
            return Err(Error::config("refit_every must be at least 1"));
        }
        Ok(())
    }

    pub(crate) fn refit_at(&self, iteration: usize) -> bool {
        iteration < self.refit_until || iteration.is_multiple_of(self.refit_every)
    }
}
