//! Small composite test functions with known structure.

use std::f64::consts::PI;

use crate::bench::cost::{cost_gradient, cost_terms, CostWeights};
use crate::moments::CompositeObjective;

/// `y_i = x_i²`.
pub fn sphere_system(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| v * v).collect()
}

/// Production-like `y1 = x1 + x2` and duty-like `y2 = x1² + x2²`.
pub fn penalty_system(x: &[f64]) -> Vec<f64> {
    vec![x[0] + x[1], x[0] * x[0] + x[1] * x[1]]
}

/// A linear price on `x1` plus the duty `y2` plus a quadratic penalty on the
/// relative deviation of `y1` from a target.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyQuadratic {
    pub price: f64,
    pub weight: f64,
    pub target: f64,
}

impl Default for PenaltyQuadratic {
    fn default() -> Self {
        Self {
            price: 0.5,
            weight: 10.0,
            target: 1.0,
        }
    }
}

impl CompositeObjective for PenaltyQuadratic {
    fn dim_y(&self) -> usize {
        2
    }

    fn g(&self, x: &[f64]) -> f64 {
        self.price * x[0]
    }

    fn h(&self, _x: &[f64], y: &[f64]) -> f64 {
        let dev = (y[0] - self.target) / self.target;
        y[1] + self.weight * dev * dev
    }

    fn grad_h_y(&self, _x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        let t = self.target;
        Some(vec![2.0 * self.weight * (y[0] - t) / (t * t), 1.0])
    }
}

/// `y1 = (x1 - 0.3)²`, `y2 = (x2 + 0.2)²`.
pub fn exp_system(x: &[f64]) -> Vec<f64> {
    vec![(x[0] - 0.3).powi(2), (x[1] + 0.2).powi(2)]
}

/// `f = offset + exp(aᵀy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpComposite {
    pub a: Vec<f64>,
    pub offset: f64,
}

impl Default for ExpComposite {
    fn default() -> Self {
        Self {
            a: vec![0.8, 0.6],
            offset: 0.5,
        }
    }
}

impl ExpComposite {
    fn exponent(&self, y: &[f64]) -> f64 {
        self.a.iter().zip(y).map(|(a, y)| a * y).sum()
    }
}

impl CompositeObjective for ExpComposite {
    fn dim_y(&self) -> usize {
        self.a.len()
    }

    fn g(&self, _x: &[f64]) -> f64 {
        self.offset
    }

    fn h(&self, _x: &[f64], y: &[f64]) -> f64 {
        self.exponent(y).exp()
    }

    fn grad_h_y(&self, _x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        let e = self.exponent(y).exp();
        Some(self.a.iter().map(|a| a * e).collect())
    }
}

/// `y1 = sin(πx1) + x2`, `y2 = x1·x2`.
pub fn linear_system(x: &[f64]) -> Vec<f64> {
    vec![(PI * x[0]).sin() + x[1], x[0] * x[1]]
}

/// Flowsheet cost as a composite objective. Every term depends on `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowsheetCost {
    pub weights: CostWeights,
}

impl CompositeObjective for FlowsheetCost {
    fn dim_y(&self) -> usize {
        16
    }

    fn g(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn h(&self, _x: &[f64], y: &[f64]) -> f64 {
        cost_terms(y, &self.weights).f
    }

    fn grad_h_y(&self, _x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        Some(cost_gradient(y, &self.weights))
    }
}
