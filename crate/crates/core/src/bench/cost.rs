//! Operating cost of the flowsheet from its stream vector.

use serde::{Deserialize, Serialize};

use crate::bench::flowsheet::StreamVector;
use crate::error::{Error, Result};

/// Prices, stream values and the production target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    /// Price of fresh A and B per unit mass.
    pub reagent_price: [f64; 2],
    /// Fresh feed rates `F_A`, `F_B`.
    pub feed: [f64; 2],
    /// Value of A, B, C leaving in the product (negative = credit).
    pub product_value: [f64; 3],
    /// Value of A, B, C leaving in the purge.
    pub purge_value: [f64; 3],
    /// Weight of the squared relative deviation from the target rate.
    pub target_penalty: f64,
    /// Target product rate of C, `F̄`.
    pub target_rate: f64,
    /// Price of each of the five heat duties.
    pub heat_price: [f64; 5],
    /// Price of compression power.
    pub power_price: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// Material and penalty terms.
    pub f1: f64,
    /// Utility terms.
    pub f2: f64,
    pub f: f64,
}

impl CostWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_rate.is_finite() && self.target_rate > 0.0) {
            return Err(Error::config("target rate must be positive"));
        }
        if !(self.target_penalty >= 0.0) {
            return Err(Error::config("target penalty weight must be nonnegative"));
        }
        Ok(())
    }
}

/// Cost terms for a raw 16-vector, without checking stream invariants.
/// Sampled or linearized `y` values need not be physical.
#[inline]
pub fn cost_terms(y: &[f64], w: &CostWeights) -> CostBreakdown {
    let reagents = w.reagent_price[0] * w.feed[0] + w.reagent_price[1] * w.feed[1];
    let (fp, fo) = (y[0], y[4]);
    let product: f64 = (0..3).map(|i| w.product_value[i] * y[1 + i]).sum::<f64>() * fp;
    let purge: f64 = (0..3).map(|i| w.purge_value[i] * y[5 + i]).sum::<f64>() * fo;
    let dev = (y[3] * fp - w.target_rate) / w.target_rate;
    let f1 = reagents + product + purge + w.target_penalty * dev * dev;
    let heat: f64 = (0..5).map(|h| w.heat_price[h] * y[8 + h]).sum();
    let power: f64 = y[13..16].iter().sum::<f64>() * w.power_price;
    let f2 = heat + power;
    CostBreakdown { f1, f2, f: f1 + f2 }
}

/// `∇_y` of [`cost_terms`]`.f`.
pub fn cost_gradient(y: &[f64], w: &CostWeights) -> Vec<f64> {
    let (fp, fo) = (y[0], y[4]);
    let dev = (y[3] * fp - w.target_rate) / w.target_rate;
    let d_pen = 2.0 * w.target_penalty * dev / w.target_rate;
    let mut g = vec![0.0; StreamVector::LEN];
    g[0] = (0..3).map(|i| w.product_value[i] * y[1 + i]).sum::<f64>() + d_pen * y[3];
    for i in 0..3 {
        g[1 + i] = w.product_value[i] * fp;
        g[5 + i] = w.purge_value[i] * fo;
    }
    g[3] += d_pen * fp;
    g[4] = (0..3).map(|i| w.purge_value[i] * y[5 + i]).sum();
    g[8..13].copy_from_slice(&w.heat_price);
    for k in 0..3 {
        g[13 + k] = w.power_price;
    }
    g
}

/// Operating cost `f = f1 + f2` of a stream vector.
pub fn process_cost(y: &StreamVector, weights: &CostWeights) -> Result<CostBreakdown> {
    weights.validate()?;
    Ok(cost_terms(&y.to_vec(), weights))
}
