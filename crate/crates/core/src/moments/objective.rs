use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A known outer function split as `f(x, y) = g(x) + h(x, y)`, where `g`
/// collects every term that does not depend on `y`.
pub trait CompositeObjective: Send + Sync {
    fn dim_y(&self) -> usize;

    fn g(&self, x: &[f64]) -> f64;

    fn h(&self, x: &[f64], y: &[f64]) -> f64;

    /// Analytic `∇_y h(x, y)`, if available.
    fn grad_h_y(&self, _x: &[f64], _y: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn f(&self, x: &[f64], y: &[f64]) -> f64 {
        self.g(x) + self.h(x, y)
    }

    /// `Some` when `f` is exactly affine in `y`.
    fn as_linear(&self) -> Option<&LinearObjective> {
        None
    }
}

/// `f = aᵀy + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearObjective {
    pub a: Vec<f64>,
    pub b: f64,
}

impl LinearObjective {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        Self { a, b }
    }
}

impl CompositeObjective for LinearObjective {
    fn dim_y(&self) -> usize {
        self.a.len()
    }

    fn g(&self, _x: &[f64]) -> f64 {
        self.b
    }

    fn h(&self, _x: &[f64], y: &[f64]) -> f64 {
        self.a.iter().zip(y).map(|(a, y)| a * y).sum()
    }

    fn grad_h_y(&self, _x: &[f64], _y: &[f64]) -> Option<Vec<f64>> {
        Some(self.a.clone())
    }

    fn as_linear(&self) -> Option<&LinearObjective> {
        Some(self)
    }
}

type GFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type HFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

/// Composite objective assembled from closures.
///
/// ```
/// use composite_bo::moments::{CompositeObjective, FnObjective};
/// let obj = FnObjective::new(1, |x| x[0], |_x, y| y[0] * y[0])
///     .with_gradient(|_x, y| vec![2.0 * y[0]]);
/// assert_eq!(obj.f(&[1.0], &[3.0]), 10.0);
/// ```
#[derive(Clone)]
pub struct FnObjective {
    dim_y: usize,
    g: GFn,
    h: HFn,
    grad: Option<GradFn>,
}

impl FnObjective {
    pub fn new(
        dim_y: usize,
        g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        h: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim_y,
            g: Arc::new(g),
            h: Arc::new(h),
            grad: None,
        }
    }

    pub fn with_gradient(
        mut self,
        grad: impl Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    /// Drop the analytic gradient so Jacobians fall back to finite differences.
    pub fn without_gradient(mut self) -> Self {
        self.grad = None;
        self
    }
}

impl fmt::Debug for FnObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnObjective")
            .field("dim_y", &self.dim_y)
            .field("analytic_gradient", &self.grad.is_some())
            .finish()
    }
}

impl CompositeObjective for FnObjective {
    fn dim_y(&self) -> usize {
        self.dim_y
    }

    fn g(&self, x: &[f64]) -> f64 {
        (self.g)(x)
    }

    fn h(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.h)(x, y)
    }

    fn grad_h_y(&self, x: &[f64], y: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(x, y))
    }
}

/// Check `g + h` against a separately supplied combined `f` at the probes.
pub fn check_split(
    obj: &dyn CompositeObjective,
    combined: impl Fn(&[f64], &[f64]) -> f64,
    probes: &[(Vec<f64>, Vec<f64>)],
    tol: f64,
) -> Result<()> {
    for (x, y) in probes {
        let split = obj.g(x) + obj.h(x, y);
        let direct = combined(x, y);
        if (split - direct).abs() > tol * (1.0 + direct.abs()) {
            return Err(Error::Evaluation {
                message: format!("g + h = {split} but f = {direct}"),
                at: y.clone(),
            });
        }
    }
    Ok(())
}
