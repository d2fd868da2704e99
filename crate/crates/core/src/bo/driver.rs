use std::sync::Arc;
use std::time::Instant;

use crate::acquisition::{lcb, minimize_acquisition_from, SearchBudget};
use crate::bo::config::{BoConfig, Variant};
use crate::bo::design::initial_design;
use crate::bo::oracle::Oracle;
use crate::bo::trace::RunTrace;
use crate::domain::{BoxDomain, Dataset};
use crate::error::{Error, Result};
use crate::gp::{fit, fit_bank_warm, BankScratch, FitOptions, GpBank, GpModel};
use crate::moments::{moment_engine, CompositeObjective, EngineConfig, MomentEvaluator};
use crate::seeds;

const SEED_DESIGN: u64 = 0;
const SEED_FIT: u64 = 1;
const SEED_SEARCH: u64 = 2;
const SEED_ENGINE: u64 = 3;

#[allow(clippy::large_enum_variant)]
enum Surrogate {
    Direct(GpModel),
    Bank(GpBank),
}

fn elapsed_ms(start: Instant) -> f64 {
    // floor at a microsecond so every record carries a positive time
    (start.elapsed().as_secs_f64() * 1e3).max(1e-3)
}

/// Run one Bayesian optimization loop.
///
/// `sbo` models observed `f` directly and needs no objective; `mcbo` and
/// `bois` model the observed `y` with a GP bank and need the composite
/// objective to turn its posterior into moments of `f`. Every iteration
/// costs exactly one oracle evaluation.
pub fn run(
    oracle: &Oracle,
    objective: Option<Arc<dyn CompositeObjective>>,
    domain: &BoxDomain,
    config: &BoConfig,
) -> Result<RunTrace> {
    config.validate()?;
    let evaluator = match (config.variant, objective) {
        (Variant::Sbo, Some(_)) => {
            return Err(Error::config("sbo models f directly and takes no objective"))
        }
        (Variant::Sbo, None) => None,
        (_, None) => {
            return Err(Error::config(format!(
                "{} needs the composite objective",
                config.variant
            )))
        }
        (variant, Some(obj)) => {
            if obj.dim_y() != oracle.dim_y() {
                return Err(Error::shape(format!(
                    "objective expects {} outputs, oracle produces {}",
                    obj.dim_y(),
                    oracle.dim_y()
                )));
            }
            let engine = match variant {
                Variant::Mcbo => EngineConfig::MonteCarlo {
                    samples: config.mc_samples,
                    seed: seeds::derive(config.seed, &[SEED_ENGINE]),
                },
                _ => EngineConfig::Bois {
                    policy: config.policy,
                },
            };
            Some(moment_engine(&engine, obj)?)
        }
    };

    let mut trace = RunTrace::new(config.clone(), domain.dim(), oracle.dim_y());
    let design = initial_design(
        domain,
        &config.initial_design,
        seeds::derive(config.seed, &[SEED_DESIGN]),
    )?;
    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut targets: Vec<Vec<f64>> = Vec::new();

    for x in design {
        if !observe(oracle, config.variant, &mut trace, &mut xs, &mut targets, x, None, Instant::now()) {
            return Ok(trace);
        }
    }

    let mut surrogate: Option<Surrogate> = None;
    for t in 0..config.iterations {
        let start = Instant::now();
        let data = Dataset::new(xs.clone(), targets.clone())?;
        let model = refit(&data, domain, config, t, surrogate.as_ref())?;
        let budget = SearchBudget {
            seed: seeds::derive(config.seed, &[SEED_SEARCH, t as u64]),
            ..config.search
        };
        let incumbent = trace.incumbent().map(|i| vec![i.x]).unwrap_or_default();
        let (x_next, prediction) = match &model {
            Surrogate::Direct(gp) => {
                let af = |x: &[f64]| match gp.predict(x) {
                    Ok((m, v)) => lcb(m, v.sqrt(), &config.acquisition, t),
                    Err(_) => f64::NAN,
                };
                let out = minimize_acquisition_from(&af, domain, &budget, &incumbent)?;
                let (m, v) = gp.predict(&out.x)?;
                (out.x, (m, v.sqrt(), out.value))
            }
            Surrogate::Bank(bank) => {
                let ev = evaluator
                    .as_ref()
                    .expect("composite variants always build an evaluator")
                    .with_stream(t as u64);
                let af = |x: &[f64]| match composite_moments(bank, &ev, x) {
                    Ok((m, s)) => lcb(m, s, &config.acquisition, t),
                    Err(_) => f64::NAN,
                };
                let out = minimize_acquisition_from(&af, domain, &budget, &incumbent)?;
                let (m, s) = composite_moments(bank, &ev, &out.x)?;
                (out.x, (m, s, out.value))
            }
        };
        surrogate = Some(model);
        if !observe(
            oracle,
            config.variant,
            &mut trace,
            &mut xs,
            &mut targets,
            x_next,
            Some(prediction),
            start,
        ) {
            break;
        }
    }
    Ok(trace)
}

/// Evaluate the oracle and append the outcome; `false` stops the run.
#[allow(clippy::too_many_arguments)]
fn observe(
    oracle: &Oracle,
    variant: Variant,
    trace: &mut RunTrace,
    xs: &mut Vec<Vec<f64>>,
    targets: &mut Vec<Vec<f64>>,
    x: Vec<f64>,
    prediction: Option<(f64, f64, f64)>,
    start: Instant,
) -> bool {
    match oracle.evaluate(&x) {
        Ok(obs) if obs.f.is_finite() => {
            xs.push(x.clone());
            targets.push(match variant {
                Variant::Sbo => vec![obs.f],
                _ => obs.y.clone(),
            });
            trace.push(x, obs.y, obs.f, prediction, elapsed_ms(start));
            true
        }
        Ok(obs) => {
            trace.error = Some(format!("oracle returned f = {} at {x:?}", obs.f));
            false
        }
        Err(e) => {
            trace.error = Some(format!("oracle failed at {x:?}: {e}"));
            false
        }
    }
}

fn composite_moments(bank: &GpBank, ev: &MomentEvaluator, x: &[f64]) -> Result<(f64, f64)> {
    let mut scratch = BankScratch::new(bank);
    let post = bank.posterior_with(x, &mut scratch);
    let est = ev.evaluate(x, &post)?;
    Ok((est.mean, est.std))
}

fn refit(
    data: &Dataset,
    domain: &BoxDomain,
    config: &BoConfig,
    iteration: usize,
    previous: Option<&Surrogate>,
) -> Result<Surrogate> {
    let warm = previous.is_some();
    let options = FitOptions {
        restarts: if warm {
            config.refit_restarts
        } else {
            config.fit_restarts
        },
        seed: seeds::derive(config.seed, &[SEED_FIT, iteration as u64]),
        noise: config.noise,
        domain: Some(domain.clone()),
        ..FitOptions::default()
    };
    let reuse = previous.is_some() && !config.refit_at(iteration);
    match (config.variant, previous) {
        (Variant::Sbo, prev) => {
            let prev = match prev {
                Some(Surrogate::Direct(m)) => Some(m),
                _ => None,
            };
            let model = match prev {
                Some(m) if reuse => GpModel::condition_standardized(
                    m.kernel().clone(),
                    data,
                    crate::gp::standardization_for(data, Some(domain)),
                )?,
                _ => fit(
                    data,
                    config.kernel,
                    &FitOptions {
                        warm_start: prev.map(|m| m.kernel().clone()),
                        ..options
                    },
                )?,
            };
            Ok(Surrogate::Direct(model))
        }
        (_, prev) => {
            let prev = match prev {
                Some(Surrogate::Bank(b)) => Some(b),
                _ => None,
            };
            let bank = match prev {
                Some(b) if reuse => b.recondition(data, Some(domain))?,
                _ => fit_bank_warm(data, config.kernel, &options, prev)?,
            };
            Ok(Surrogate::Bank(bank))
        }
    }
}
