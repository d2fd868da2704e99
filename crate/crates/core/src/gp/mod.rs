//! Gaussian process regression: kernels, likelihood-based fitting, posterior
//! prediction and sampling, and banks of independent GPs for vector outputs.

mod bank;
mod fit;
mod kernel;
mod model;
mod posterior;

pub use bank::{fit_bank, fit_bank_warm, output_seed, BankRecord, GpBank, ModelRecord, BANK_SCHEMA, GP_SCHEMA};
pub(crate) use bank::BankScratch;
pub use fit::{default_kernel, fit, FitOptions, NoiseMode};
pub(crate) use fit::standardization_for;
pub use kernel::{kernel_eval, KernelFamily, KernelSpec};
pub use model::{GpModel, Standardization, JITTER_MAX, JITTER_START};
pub use posterior::{sample_posterior, GaussianSampler, PosteriorGaussian};
