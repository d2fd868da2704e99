//! The optimization loop: standard BO on `f` and the two composite variants.

mod config;
mod design;
mod driver;
mod oracle;
mod trace;

pub use config::{BoConfig, Variant};
pub use design::{initial_design, random_points, InitialDesign, MAX_GRID_POINTS};
pub use driver::run;
pub use oracle::{NoiseModel, Observation, Oracle, SystemFn};
pub use trace::{incumbent_curve, Incumbent, RunTrace, TimingColumn, TraceRecord};
