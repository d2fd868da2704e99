//! Moments of `f(x, y(x))` from the Gaussian posterior of `y`.

mod engines;
mod evaluator;
mod objective;

pub use engines::{
    bois_moments, exact_linear_moments, jacobian_fd, jacobian_y, mc_moments, Engine,
    MomentEstimate, MomentMeta, ReferencePolicy, FD_STEP, VARIANCE_CLAMP,
};
pub use evaluator::{moment_engine, EngineConfig, MomentEvaluator};
pub use objective::{check_split, CompositeObjective, FnObjective, LinearObjective};
