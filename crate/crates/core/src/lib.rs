//! Bayesian optimization of composite objectives `f(x, y(x))`.
//!
//! The inner vector function `y` is expensive and modeled by a bank of
//! Gaussian processes; the outer function `f` is cheap and known. Three
//! engines turn the Gaussian posterior of `y` into a mean and standard
//! deviation for `f`:
//!
//! * [`moments::exact_linear_moments`] for `f = aᵀy + b`,
//! * [`moments::mc_moments`], sampling the posterior,
//! * [`moments::bois_moments`], a first-order expansion of `f` in `y` around a
//!   reference point, which gives closed-form Gaussian moments.
//!
//! The moments feed a lower-confidence-bound acquisition ([`acquisition`])
//! inside the optimization loop in [`bo`]. [`bench`] holds benchmark systems,
//! including a reactor/separator/recycle flowsheet, and [`experiment`] runs
//! campaigns, the moment parity study and aggregate reports.

pub mod acquisition;
pub mod bench;
pub mod bo;
pub mod domain;
pub mod error;
pub mod experiment;
pub mod gp;
pub mod moments;
pub mod seeds;
pub(crate) mod stats;

pub use domain::{BoxDomain, Dataset};
pub use error::{Error, Result};
