//! Search-space box and training data containers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lower, upper]` in `d_x` dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoxRecord", into = "BoxRecord")]
pub struct BoxDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BoxRecord {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl TryFrom<BoxRecord> for BoxDomain {
    type Error = Error;
    fn try_from(r: BoxRecord) -> Result<Self> {
        BoxDomain::new(r.lower, r.upper)
    }
}

impl From<BoxDomain> for BoxRecord {
    fn from(d: BoxDomain) -> Self {
        BoxRecord {
            lower: d.lower,
            upper: d.upper,
        }
    }
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::shape("box domain needs at least one dimension"));
        }
        if lower.len() != upper.len() {
            return Err(Error::shape(format!(
                "box bounds have lengths {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::shape(format!(
                    "box dimension {i}: need finite lower < upper, got [{l}, {u}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The box `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }

    /// Map a point of the unit cube onto the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, t)| self.lower[i] + t * self.width(i))
            .collect()
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::shape(format!(
                "point has dimension {}, domain has {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Input/output observations. `outputs` holds one row of `d_y` values per input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    outputs: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::shape("dataset must contain at least one point"));
        }
        if inputs.len() != outputs.len() {
            return Err(Error::shape(format!(
                "{} inputs but {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        let dx = inputs[0].len();
        let dy = outputs[0].len();
        if dx == 0 || dy == 0 {
            return Err(Error::shape("empty input or output rows"));
        }
        if let Some(i) = inputs.iter().position(|r| r.len() != dx) {
            return Err(Error::shape(format!("input row {i} has wrong dimension")));
        }
        if let Some(i) = outputs.iter().position(|r| r.len() != dy) {
            return Err(Error::shape(format!("output row {i} has wrong dimension")));
        }
        Ok(Self { inputs, outputs })
    }

    /// Single-output dataset.
    pub fn scalar(inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        Self::new(inputs, outputs.into_iter().map(|v| vec![v]).collect())
    }

    /// Check every input lies in `domain`.
    pub fn within(self, domain: &BoxDomain) -> Result<Self> {
        if let Some(i) = self.inputs.iter().position(|x| !domain.contains(x)) {
            return Err(Error::shape(format!("input row {i} lies outside the domain")));
        }
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim_x(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn dim_y(&self) -> usize {
        self.outputs[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[Vec<f64>] {
        &self.outputs
    }

    /// Column `j` of the outputs.
    pub fn output_column(&self, j: usize) -> Vec<f64> {
        self.outputs.iter().map(|r| r[j]).collect()
    }

    pub fn push(&mut self, x: Vec<f64>, y: Vec<f64>) -> Result<()> {
        if x.len() != self.dim_x() || y.len() != self.dim_y() {
            return Err(Error::shape("pushed row does not match dataset dimensions"));
        }
        self.inputs.push(x);
        self.outputs.push(y);
        Ok(())
    }
}
