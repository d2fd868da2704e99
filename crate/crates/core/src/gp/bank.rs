use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{BoxDomain, Dataset};
use crate::error::{Error, Result};
use crate::gp::fit::{fit, standardization_for, FitOptions};
use crate::gp::kernel::{KernelFamily, KernelSpec};
use crate::gp::model::{GpModel, Standardization};
use crate::gp::posterior::PosteriorGaussian;

/// Schema tag written into serialized models.
pub const GP_SCHEMA: &str = "composite-bo/gp@1";
pub const BANK_SCHEMA: &str = "composite-bo/gp-bank@1";

/// Independent single-output GPs, one per component of `y`.
#[derive(Debug, Clone)]
pub struct GpBank {
    models: Vec<GpModel>,
}

/// Seed used for output `index` of a bank fitted with base seed `seed`.
pub fn output_seed(seed: u64, index: usize) -> u64 {
    crate::seeds::derive(seed, &[0xb4_4e, index as u64])
}

/// Fit one GP per output column. Outputs are fitted in parallel; each gets
/// its own derived seed so the result does not depend on scheduling.
pub fn fit_bank(data: &Dataset, family: KernelFamily, options: &FitOptions) -> Result<GpBank> {
    fit_bank_warm(data, family, options, None)
}

/// `fit_bank` with per-output warm starts taken from `previous`.
pub fn fit_bank_warm(
    data: &Dataset,
    family: KernelFamily,
    options: &FitOptions,
    previous: Option<&GpBank>,
) -> Result<GpBank> {
    let dy = data.dim_y();
    let models = (0..dy)
        .into_par_iter()
        .map(|j| {
            let column = Dataset::scalar(data.inputs().to_vec(), data.output_column(j))?;
            let mut opts = options.clone();
            opts.seed = output_seed(options.seed, j);
            if let Some(prev) = previous.and_then(|b| b.models.get(j)) {
                opts.warm_start = Some(prev.kernel().clone());
            }
            fit(&column, family, &opts).map_err(|e| Error::Output {
                index: j,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GpBank { models })
}

impl GpBank {
    pub fn from_models(models: Vec<GpModel>) -> Result<Self> {
        let Some(first) = models.first() else {
            return Err(Error::shape("bank needs at least one model"));
        };
        if models.iter().any(|m| m.dim() != first.dim()) {
            return Err(Error::shape("bank models disagree on input dimension"));
        }
        Ok(Self { models })
    }

    /// Re-condition every output on new data, keeping hyperparameters.
    pub fn recondition(&self, data: &Dataset, domain: Option<&BoxDomain>) -> Result<Self> {
        let models = (0..self.dim_y())
            .map(|j| {
                let column = Dataset::scalar(data.inputs().to_vec(), data.output_column(j))?;
                let s = standardization_for(&column, domain);
                GpModel::condition_standardized(self.models[j].kernel().clone(), &column, s)
                    .map_err(|e| Error::Output {
                        index: j,
                        source: Box::new(e),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { models })
    }

    pub fn dim_x(&self) -> usize {
        self.models[0].dim()
    }

    pub fn dim_y(&self) -> usize {
        self.models.len()
    }

    pub fn models(&self) -> &[GpModel] {
        &self.models
    }

    /// Mean `m_y(x)` and diagonal covariance `Σ_y(x)` at one point.
    pub fn posterior_at(&self, x: &[f64]) -> Result<PosteriorGaussian> {
        if x.len() != self.dim_x() {
            return Err(Error::shape(format!(
                "query has dimension {}, bank has {}",
                x.len(),
                self.dim_x()
            )));
        }
        let mut scratch = BankScratch::new(self);
        Ok(self.posterior_with(x, &mut scratch))
    }

    pub(crate) fn posterior_with(&self, x: &[f64], scratch: &mut BankScratch) -> PosteriorGaussian {
        let mut means = Vec::with_capacity(self.dim_y());
        let mut vars = Vec::with_capacity(self.dim_y());
        for m in &self.models {
            let (mu, var) = m.predict_with(x, &mut scratch.zq, &mut scratch.kq);
            means.push(mu);
            vars.push(var);
        }
        PosteriorGaussian::diagonal(means, vars)
    }

    /// Per-output joint posteriors over several query points.
    pub fn posterior(&self, queries: &[Vec<f64>]) -> Result<Vec<PosteriorGaussian>> {
        self.models.iter().map(|m| m.posterior(queries)).collect()
    }

    pub fn to_record(&self) -> BankRecord {
        BankRecord {
            schema: BANK_SCHEMA.to_string(),
            models: self.models.iter().map(ModelRecord::from_model).collect(),
        }
    }

    pub fn from_record(record: &BankRecord) -> Result<Self> {
        if record.schema != BANK_SCHEMA {
            return Err(Error::config(format!(
                "unsupported bank schema '{}' (expected '{BANK_SCHEMA}')",
                record.schema
            )));
        }
        let models = record
            .models
            .iter()
            .map(ModelRecord::to_model)
            .collect::<Result<Vec<_>>>()?;
        Self::from_models(models)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_record())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_record(&serde_json::from_str(text)?)
    }
}

pub(crate) struct BankScratch {
    zq: Vec<f64>,
    kq: Vec<f64>,
}

impl BankScratch {
    pub(crate) fn new(bank: &GpBank) -> Self {
        Self {
            zq: vec![0.0; bank.dim_x()],
            kq: vec![0.0; bank.models[0].data().len()],
        }
    }
}

/// Serialized form of one GP: kernel, coordinate maps and training data.
/// The factorization is rebuilt on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub schema: String,
    pub kernel: KernelSpec,
    pub standardization: Standardization,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankRecord {
    pub schema: String,
    pub models: Vec<ModelRecord>,
}

impl ModelRecord {
    pub fn from_model(m: &GpModel) -> Self {
        Self {
            schema: GP_SCHEMA.to_string(),
            kernel: m.kernel().clone(),
            standardization: m.standardization().clone(),
            inputs: m.data().inputs().to_vec(),
            outputs: m.data().output_column(0),
        }
    }

    pub fn to_model(&self) -> Result<GpModel> {
        if self.schema != GP_SCHEMA {
            return Err(Error::config(format!(
                "unsupported model schema '{}' (expected '{GP_SCHEMA}')",
                self.schema
            )));
        }
        let data = Dataset::scalar(self.inputs.clone(), self.outputs.clone())?;
        GpModel::condition_standardized(self.kernel.clone(), &data, self.standardization.clone())
    }
}

impl GpModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelRecord::from_model(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<ModelRecord>(text)?.to_model()
    }
}
