//! Lower-confidence-bound acquisition and a multi-start coordinate pattern
//! search to minimize it over a box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum KappaSchedule {
    #[default]
    Constant,
    /// `κ · exp(-rate · iteration)`.
    Decaying { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AcquisitionSpec {
    pub kappa: f64,
    pub schedule: KappaSchedule,
}

impl Default for AcquisitionSpec {
    fn default() -> Self {
        Self {
            kappa: 2.0,
            schedule: KappaSchedule::Constant,
        }
    }
}

impl AcquisitionSpec {
    pub fn constant(kappa: f64) -> Self {
        Self {
            kappa,
            schedule: KappaSchedule::Constant,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::config("kappa must be finite and nonnegative"));
        }
        if let KappaSchedule::Decaying { rate } = self.schedule {
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(Error::config("kappa decay rate must be finite and nonnegative"));
            }
        }
        Ok(())
    }

    pub fn kappa_at(&self, iteration: usize) -> f64 {
        match self.schedule {
            KappaSchedule::Constant => self.kappa,
            KappaSchedule::Decaying { rate } => self.kappa * (-rate * iteration as f64).exp(),
        }
    }
}

/// `mean - κ(iteration) · std`.
pub fn lcb(mean: f64, std: f64, spec: &AcquisitionSpec, iteration: usize) -> f64 {
    if std == 0.0 {
        return mean;
    }
    mean - spec.kappa_at(iteration) * std
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchBudget {
    pub restarts: usize,
    pub max_evals_per_restart: usize,
    /// Search stops once the step is below `tolerance` times the box width.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_evals_per_restart: 200,
            tolerance: 1e-4,
            seed: 0,
        }
    }
}

impl SearchBudget {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::config("search needs at least one restart"));
        }
        if self.max_evals_per_restart == 0 {
            return Err(Error::config("search needs at least one evaluation per restart"));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::config("search tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    /// Restarts abandoned because the acquisition returned a non-finite value.
    pub aborted_restarts: usize,
    pub evaluations: usize,
}

fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while out.len() < count {
        if out.iter().take_while(|p| *p * *p <= candidate).all(|p| !candidate.is_multiple_of(*p)) {
            out.push(candidate);
        }
        candidate += 1;
    }
    out
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut factor = inv;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * factor;
        index /= base;
        factor *= inv;
    }
    value
}

/// Halton points with a seeded random shift (modulo 1). Point `k` does not
/// depend on how many points are requested.
pub fn shifted_halton(domain: &BoxDomain, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let d = domain.dim();
    let bases = primes(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
    (0..count)
        .map(|k| {
            let u: Vec<f64> = (0..d)
                .map(|i| (radical_inverse(k as u64 + 1, bases[i]) + shift[i]).fract())
                .collect();
            domain.from_unit(&u)
        })
        .collect()
}

struct RestartResult {
    x: Vec<f64>,
    value: f64,
    evaluations: usize,
}

fn pattern_search<F>(af: &F, domain: &BoxDomain, start: &[f64], budget: &SearchBudget) -> Option<RestartResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let d = domain.dim();
    let mut x = start.to_vec();
    domain.clamp(&mut x);
    let mut fx = af(&x);
    let mut evals = 1;
    if !fx.is_finite() {
        return None;
    }
    let mut rel_step = 0.25;
    while evals < budget.max_evals_per_restart && rel_step >= budget.tolerance {
        let mut improved = false;
        'coords: for i in 0..d {
            let step = rel_step * domain.width(i);
            for sign in [1.0, -1.0] {
                let mut cand = x.clone();
                cand[i] = (x[i] + sign * step).clamp(domain.lower()[i], domain.upper()[i]);
                if cand[i] == x[i] {
                    continue;
                }
                let fc = af(&cand);
                evals += 1;
                if !fc.is_finite() {
                    return None;
                }
                if fc < fx {
                    x = cand;
                    fx = fc;
                    improved = true;
                    break;
                }
                if evals >= budget.max_evals_per_restart {
                    break 'coords;
                }
            }
        }
        if !improved {
            rel_step *= 0.5;
        }
    }
    Some(RestartResult {
        x,
        value: fx,
        evaluations: evals,
    })
}

/// Minimize `af` over `domain` from `budget.restarts` shifted-Halton starts.
pub fn minimize_acquisition<F>(af: &F, domain: &BoxDomain, budget: &SearchBudget) -> Result<SearchOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    minimize_acquisition_from(af, domain, budget, &[])
}

/// As [`minimize_acquisition`], with `extra_starts` searched after the
/// low-discrepancy starts (e.g. the best points observed so far).
pub fn minimize_acquisition_from<F>(
    af: &F,
    domain: &BoxDomain,
    budget: &SearchBudget,
    extra_starts: &[Vec<f64>],
) -> Result<SearchOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    budget.validate()?;
    if let Some(p) = extra_starts.iter().find(|p| p.len() != domain.dim()) {
        return Err(Error::shape(format!(
            "start point has dimension {}, domain has {}",
            p.len(),
            domain.dim()
        )));
    }
    let mut starts = shifted_halton(domain, budget.restarts, budget.seed);
    starts.extend(extra_starts.iter().cloned());
    let results: Vec<Option<RestartResult>> = starts
        .par_iter()
        .map(|s| pattern_search(af, domain, s, budget))
        .collect();
    let aborted = results.iter().filter(|r| r.is_none()).count();
    let evaluations = results.iter().flatten().map(|r| r.evaluations).sum();
    let mut best: Option<RestartResult> = None;
    for r in results.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| r.value < b.value) {
            best = Some(r);
        }
    }
    let best = best.ok_or_else(|| Error::Evaluation {
        message: format!("acquisition was non-finite in all {} restarts", starts.len()),
        at: Vec::new(),
    })?;
    Ok(SearchOutcome {
        x: best.x,
        value: best.value,
        aborted_restarts: aborted,
        evaluations,
    })
}
