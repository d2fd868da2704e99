//! Named benchmarks and their recorded optima.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bench::cost::CostWeights;
use crate::bench::flowsheet::{simulate_flowsheet, FlowsheetParams, ProcessInputs};
use crate::bench::params::default_flowsheet;
use crate::bench::synthetic::{
    exp_system, linear_system, penalty_system, sphere_system, ExpComposite, FlowsheetCost,
    PenaltyQuadratic,
};
use crate::bo::{Oracle, SystemFn};
use crate::domain::BoxDomain;
use crate::error::{Error, Result};
use crate::moments::{CompositeObjective, LinearObjective};

pub const REGISTRY_SCHEMA: &str = "composite-bo/benchmarks@1";

const REGISTRY_FILE: &str = include_str!("../../data/benchmarks.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimumKind {
    /// Proven optimum.
    Exact,
    /// Best value found so far by numerical search.
    BestKnown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownOptimum {
    pub value: f64,
    pub x: Vec<f64>,
    pub kind: OptimumKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryEntry {
    pub name: String,
    pub description: String,
    pub optimum: Option<KnownOptimum>,
    pub provenance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryFile {
    pub schema: String,
    pub version: u32,
    pub benchmarks: Vec<RegistryEntry>,
}

impl RegistryFile {
    pub fn bundled() -> Self {
        let file: RegistryFile =
            serde_json::from_str(REGISTRY_FILE).expect("bundled registry parses");
        assert_eq!(file.schema, REGISTRY_SCHEMA);
        file
    }

    pub fn entry(&self, name: &str) -> Option<&RegistryEntry> {
        self.benchmarks.iter().find(|e| e.name == name)
    }
}

/// Everything needed to optimize one benchmark.
#[derive(Clone)]
pub struct Benchmark {
    pub name: String,
    pub domain: BoxDomain,
    pub objective: Arc<dyn CompositeObjective>,
    pub system: SystemFn,
    pub optimum: Option<KnownOptimum>,
}

impl fmt::Debug for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Benchmark")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("dim_y", &self.objective.dim_y())
            .field("optimum", &self.optimum)
            .finish()
    }
}

impl Benchmark {
    /// A fresh composite oracle (evaluation counter at zero).
    pub fn oracle(&self) -> Oracle {
        Oracle::composite(self.system.clone(), self.objective.clone())
    }

    /// `y(x)` and `f(x)` without counting an evaluation. `x` must lie in
    /// the domain.
    pub fn evaluate(&self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        self.domain.check_point(x)?;
        if !self.domain.contains(x) {
            return Err(Error::config(format!("{x:?} is outside the {} domain", self.name)));
        }
        let y = (self.system)(x)?;
        let f = self.objective.f(x, &y);
        Ok((y, f))
    }
}

pub const BENCHMARK_NAMES: [&str; 5] = [
    "flowsheet",
    "sphere-composite",
    "penalty-quadratic",
    "exp-composite",
    "linear-composite",
];

pub fn list_benchmarks() -> Vec<RegistryEntry> {
    let file = RegistryFile::bundled();
    BENCHMARK_NAMES
        .iter()
        .filter_map(|n| file.entry(n).cloned())
        .collect()
}

fn total(f: fn(&[f64]) -> Vec<f64>) -> SystemFn {
    Arc::new(move |x: &[f64]| Ok(f(x)))
}

/// Look up a benchmark by name.
pub fn get_benchmark(name: &str) -> Result<Benchmark> {
    let file = RegistryFile::bundled();
    let optimum = file.entry(name).and_then(|e| e.optimum.clone());
    let square = |dim| BoxDomain::cube(dim, -1.0, 1.0).expect("valid cube");
    let (domain, objective, system): (BoxDomain, Arc<dyn CompositeObjective>, SystemFn) =
        match name {
            "flowsheet" => {
                let (params, weights) = default_flowsheet();
                let b = flowsheet_benchmark(params, weights);
                return Ok(Benchmark { optimum, ..b });
            }
            "sphere-composite" => (
                square(3),
                Arc::new(LinearObjective::new(vec![1.0; 3], 0.0)),
                total(sphere_system),
            ),
            "penalty-quadratic" => (
                square(2),
                Arc::new(PenaltyQuadratic::default()),
                total(penalty_system),
            ),
            "exp-composite" => (
                square(2),
                Arc::new(ExpComposite::default()),
                total(exp_system),
            ),
            "linear-composite" => (
                square(2),
                Arc::new(LinearObjective::new(vec![2.0, -1.0], 1.0)),
                total(linear_system),
            ),
            other => {
                return Err(Error::config(format!(
                    "unknown benchmark '{other}' (known: {})",
                    BENCHMARK_NAMES.join(", ")
                )))
            }
        };
    Ok(Benchmark {
        name: name.to_string(),
        domain,
        objective,
        system,
        optimum,
    })
}

/// The flowsheet with caller-supplied parameters. No optimum is attached.
pub fn flowsheet_benchmark(params: FlowsheetParams, weights: CostWeights) -> Benchmark {
    let params = Arc::new(params);
    let system: SystemFn = Arc::new(move |x: &[f64]| {
        let inputs = ProcessInputs::from_slice(x)?;
        Ok(simulate_flowsheet(&inputs, &params)?.to_vec())
    });
    Benchmark {
        name: "flowsheet".to_string(),
        domain: ProcessInputs::domain(),
        objective: Arc::new(FlowsheetCost { weights }),
        system,
        optimum: None,
    }
}
