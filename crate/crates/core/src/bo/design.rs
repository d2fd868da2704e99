use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::BoxDomain;
use crate::error::{Error, Result};

/// Largest grid `initial_design` will enumerate.
pub const MAX_GRID_POINTS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum InitialDesign {
    /// One point; a seeded uniform draw when `x` is absent.
    SinglePoint {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x: Option<Vec<f64>>,
    },
    Random { n: usize },
    /// Full factorial lattice with `levels` values per dimension.
    Grid { levels: usize },
}

impl Default for InitialDesign {
    fn default() -> Self {
        InitialDesign::SinglePoint { x: None }
    }
}

/// Points of the initial design. Grid points are ordered with the first
/// coordinate varying slowest, so the first is the lower corner and the
/// last the upper corner.
pub fn initial_design(domain: &BoxDomain, design: &InitialDesign, seed: u64) -> Result<Vec<Vec<f64>>> {
    let d = domain.dim();
    match design {
        InitialDesign::SinglePoint { x: Some(x) } => {
            if !domain.contains(x) {
                return Err(Error::config(format!("start point {x:?} is outside the domain")));
            }
            Ok(vec![x.clone()])
        }
        InitialDesign::SinglePoint { x: None } => Ok(random_points(domain, 1, seed)),
        InitialDesign::Random { n } => {
            if *n == 0 {
                return Err(Error::config("random design needs n >= 1"));
            }
            Ok(random_points(domain, *n, seed))
        }
        InitialDesign::Grid { levels } => {
            if *levels < 2 {
                return Err(Error::config("grid design needs at least 2 levels"));
            }
            let total = (0..d).try_fold(1usize, |acc, _| acc.checked_mul(*levels));
            let total = match total {
                Some(t) if t <= MAX_GRID_POINTS => t,
                _ => {
                    return Err(Error::config(format!(
                        "grid of {levels}^{d} points exceeds the limit of {MAX_GRID_POINTS}"
                    )))
                }
            };
            let mut points = Vec::with_capacity(total);
            let mut idx = vec![0usize; d];
            for _ in 0..total {
                let p = (0..d)
                    .map(|i| {
                        if idx[i] == levels - 1 {
                            domain.upper()[i]
                        } else {
                            domain.lower()[i] + domain.width(i) * idx[i] as f64 / (levels - 1) as f64
                        }
                    })
                    .collect();
                points.push(p);
                for i in (0..d).rev() {
                    idx[i] += 1;
                    if idx[i] < *levels {
                        break;
                    }
                    idx[i] = 0;
                }
            }
            Ok(points)
        }
    }
}

/// Uniform points in the box.
pub fn random_points(domain: &BoxDomain, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let u: Vec<f64> = (0..domain.dim()).map(|_| rng.gen::<f64>()).collect();
            domain.from_unit(&u)
        })
        .collect()
}
