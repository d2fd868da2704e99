//! Benchmark systems with known composite structure.

pub mod cost;
pub mod flowsheet;
pub mod params;
pub mod registry;
pub mod synthetic;

pub use cost::{cost_gradient, cost_terms, process_cost, CostBreakdown, CostWeights};
pub use flowsheet::{
    simulate_flowsheet, solve_recycle, FlowsheetParams, FlowsheetState, ProcessInputs, StreamVector,
};
pub use params::{default_flowsheet, FlowsheetFile, FLOWSHEET_SCHEMA};
pub use registry::{
    flowsheet_benchmark, get_benchmark, list_benchmarks, Benchmark, KnownOptimum, OptimumKind,
    RegistryEntry, RegistryFile, BENCHMARK_NAMES, REGISTRY_SCHEMA,
};
