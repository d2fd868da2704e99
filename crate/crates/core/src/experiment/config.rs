//! Experiment configuration files.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acquisition::{AcquisitionSpec, SearchBudget};
use crate::bench::{flowsheet_benchmark, get_benchmark, Benchmark, FlowsheetFile};
use crate::bo::{initial_design, BoConfig, InitialDesign, Variant};
use crate::error::{Error, Result};
use crate::gp::{KernelFamily, NoiseMode};
use crate::moments::ReferencePolicy;

pub const EXPERIMENT_SCHEMA: &str = "composite-bo/experiment@1";

/// Loop settings shared by every cell. Absent fields take the
/// [`BoConfig::new`] defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoSettings {
    pub acquisition: AcquisitionSpec,
    pub mc_samples: usize,
    pub policy: ReferencePolicy,
    pub kernel: KernelFamily,
    pub search: SearchBudget,
    pub fit_restarts: usize,
    pub refit_restarts: usize,
    pub refit_until: usize,
    pub refit_every: usize,
    pub noise: NoiseMode,
}

impl Default for BoSettings {
    fn default() -> Self {
        let c = BoConfig::new(Variant::Bois, 0);
        Self {
            acquisition: c.acquisition,
            mc_samples: c.mc_samples,
            policy: c.policy,
            kernel: c.kernel,
            search: c.search,
            fit_restarts: c.fit_restarts,
            refit_restarts: c.refit_restarts,
            refit_until: c.refit_until,
            refit_every: c.refit_every,
            noise: c.noise,
        }
    }
}

/// Settings for the moment parity study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParitySettings {
    /// Random training points, used unless `trace` names a run to learn from.
    pub train_points: usize,
    pub trace: Option<PathBuf>,
    pub query_points: usize,
    pub samples: Vec<usize>,
    /// Relative offset of the linearization reference.
    pub delta: f64,
}

impl Default for ParitySettings {
    fn default() -> Self {
        Self {
            train_points: 50,
            trace: None,
            query_points: 200,
            samples: vec![10, 100, 10_000],
            delta: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub benchmark: String,
    /// Flowsheet parameter file replacing the bundled one, relative to the
    /// config file.
    #[serde(default)]
    pub flowsheet_file: Option<PathBuf>,
    #[serde(default = "all_variants")]
    pub variants: Vec<Variant>,
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub bo: BoSettings,
    /// Start points: one cell per point and variant.
    #[serde(default)]
    pub campaign: InitialDesign,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[serde(default)]
    pub parallel: Option<usize>,
    #[serde(default)]
    pub parity: ParitySettings,
}

fn all_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub parallel: Option<usize>,
    pub variants: Option<Vec<Variant>>,
    pub output_dir: Option<PathBuf>,
}

/// A validated configuration with its benchmark resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub benchmark: Benchmark,
    /// Directory relative paths in the config resolve against.
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(benchmark: &str, iterations: usize) -> Self {
        Self {
            schema: EXPERIMENT_SCHEMA.to_string(),
            benchmark: benchmark.to_string(),
            flowsheet_file: None,
            variants: all_variants(),
            iterations,
            seed: 0,
            bo: BoSettings::default(),
            campaign: InitialDesign::default(),
            output_dir: None,
            parallel: None,
            parity: ParitySettings::default(),
        }
    }

    /// The loop configuration of one cell.
    pub fn bo_config(&self, variant: Variant, seed: u64, start: Vec<f64>) -> BoConfig {
        let b = &self.bo;
        BoConfig {
            variant,
            iterations: self.iterations,
            initial_design: InitialDesign::SinglePoint { x: Some(start) },
            acquisition: b.acquisition,
            mc_samples: b.mc_samples,
            policy: b.policy,
            kernel: b.kernel,
            seed,
            search: b.search,
            fit_restarts: b.fit_restarts,
            refit_restarts: b.refit_restarts,
            refit_until: b.refit_until,
            refit_every: b.refit_every,
            noise: b.noise,
        }
    }

    pub fn parallelism(&self) -> usize {
        self.parallel
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = o.parallel {
            self.parallel = Some(p);
        }
        if let Some(v) = &o.variants {
            self.variants = v.clone();
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = Some(d.clone());
        }
    }

    /// Semantic checks, each tagged with the dotted key it concerns.
    fn issues(&self, base_dir: &Path) -> (Vec<(String, String)>, Option<Benchmark>) {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |key: &str, msg: String| out.push((key.to_string(), msg));
        if self.schema != EXPERIMENT_SCHEMA {
            push(
                "schema",
                format!("unsupported schema '{}' (expected '{EXPERIMENT_SCHEMA}')", self.schema),
            );
        }
        let bench = match (&self.flowsheet_file, self.benchmark.as_str()) {
            (Some(_), name) if name != "flowsheet" => {
                push("flowsheet_file", "only valid with benchmark 'flowsheet'".into());
                None
            }
            (Some(file), _) => match FlowsheetFile::load(&base_dir.join(file)) {
                Ok(f) => Some(flowsheet_benchmark(f.params, f.weights)),
                Err(e) => {
                    push("flowsheet_file", e.to_string());
                    None
                }
            },
            (None, name) => match get_benchmark(name) {
                Ok(b) => Some(b),
                Err(e) => {
                    push("benchmark", strip(e));
                    None
                }
            },
        };
        if self.variants.is_empty() {
            push("variants", "at least one variant is required".into());
        }
        if self.variants.iter().collect::<BTreeSet<_>>().len() != self.variants.len() {
            push("variants", "variants must not repeat".into());
        }
        let b = &self.bo;
        if let Err(e) = b.acquisition.validate() {
            push("bo.acquisition", strip(e));
        }
        if let Err(e) = b.search.validate() {
            push("bo.search", strip(e));
        }
        if let Err(e) = b.policy.validate() {
            push("bo.policy", strip(e));
        }
        if b.mc_samples < 2 {
            push("bo.mc_samples", "must be at least 2".into());
        }
        if b.fit_restarts == 0 {
            push("bo.fit_restarts", "must be at least 1".into());
        }
        if b.refit_restarts == 0 {
            push("bo.refit_restarts", "must be at least 1".into());
        }
        if b.refit_every == 0 {
            push("bo.refit_every", "must be at least 1".into());
        }
        match b.noise {
            NoiseMode::Learned { min, max } if !(min > 0.0 && min <= max && max.is_finite()) => {
                push("bo.noise", "learned noise needs 0 < min <= max".into())
            }
            NoiseMode::Fixed(v) if !(v.is_finite() && v >= 0.0) => {
                push("bo.noise", "fixed noise must be finite and nonnegative".into())
            }
            _ => {}
        }
        if let Some(bench) = &bench {
            if let InitialDesign::SinglePoint { x: Some(x) } = &self.campaign {
                if x.len() != bench.domain.dim() {
                    push(
                        "campaign",
                        format!("start point has {} coordinates, domain has {}", x.len(), bench.domain.dim()),
                    );
                }
            }
            if let Err(e) = initial_design(&bench.domain, &self.campaign, 0) {
                push("campaign", strip(e));
            }
        }
        if self.parallel == Some(0) {
            push("parallel", "must be at least 1".into());
        }
        let p = &self.parity;
        if p.trace.is_none() && p.train_points < 2 {
            push("parity.train_points", "must be at least 2".into());
        }
        if p.query_points == 0 {
            push("parity.query_points", "must be at least 1".into());
        }
        if p.samples.is_empty() || p.samples.iter().any(|&s| s < 2) {
            push("parity.samples", "needs one or more sample counts, each at least 2".into());
        }
        if !(p.delta.is_finite() && p.delta > 0.0) {
            push("parity.delta", "must be finite and positive".into());
        }
        (out, bench)
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Configuration(m) => m,
        other => other.to_string(),
    }
}

/// 1-based line of the dotted `key` in JSON `text`, following the parents
/// in order. Falls back to the deepest parent found, then line 1.
pub fn locate_key(text: &str, key: &str) -> usize {
    let mut offset = 0;
    let mut found = None;
    for seg in key.split('.') {
        let needle = format!("\"{seg}\"");
        let mut search = offset;
        let mut hit = None;
        while let Some(i) = text[search..].find(&needle) {
            let at = search + i;
            let rest = text[at + needle.len()..].trim_start();
            if rest.starts_with(':') {
                hit = Some(at);
                break;
            }
            search = at + needle.len();
        }
        match hit {
            Some(at) => {
                offset = at + needle.len();
                found = Some(at);
            }
            None => break,
        }
    }
    found.map_or(1, |at| text[..at].matches('\n').count() + 1)
}

/// Parse, override and validate an experiment config. `origin` names the
/// source in messages; relative paths resolve against `base_dir`.
pub fn prepare(text: &str, origin: &str, base_dir: &Path, overrides: &Overrides) -> Result<Experiment> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        let message = message.split(" at line ").next().unwrap_or(&message).to_string();
        Error::Rejected {
            origin: origin.to_string(),
            line: inner.line(),
            key,
            message,
        }
    })?;
    config.apply(overrides);
    let (issues, bench) = config.issues(base_dir);
    if let Some((key, message)) = issues.into_iter().next() {
        return Err(Error::Rejected {
            origin: origin.to_string(),
            line: locate_key(text, &key),
            key,
            message,
        });
    }
    Ok(Experiment {
        config,
        benchmark: bench.expect("validated benchmark"),
        base_dir: base_dir.to_path_buf(),
    })
}

/// [`prepare`] on a file.
pub fn load_experiment(path: &Path, overrides: &Overrides) -> Result<Experiment> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    prepare(&text, &path.display().to_string(), &base, overrides)
}

impl Experiment {
    /// Build from an in-memory config, validating it as a file would be.
    pub fn from_config(config: ExperimentConfig) -> Result<Self> {
        let text = serde_json::to_string_pretty(&config)?;
        prepare(&text, "<config>", Path::new("."), &Overrides::default())
    }

    pub fn output_dir(&self, fallback: &Path) -> PathBuf {
        match &self.config.output_dir {
            Some(d) if d.is_absolute() => d.clone(),
            Some(d) => self.base_dir.join(d),
            None => fallback.to_path_buf(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
  "schema": "composite-bo/experiment@1",
  "benchmark": "sphere-composite",
  "iterations": 3,
  "bo": {
    "mc_samples": 64
  }
}"#;

    fn rejected(text: &str) -> (usize, String, String) {
        match prepare(text, "cfg.json", Path::new("."), &Overrides::default()) {
            Err(Error::Rejected { line, key, message, .. }) => (line, key, message),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn accepts_minimal_config() {
        let e = prepare(GOOD, "cfg.json", Path::new("."), &Overrides::default()).unwrap();
        assert_eq!(e.config.variants, Variant::ALL.to_vec());
        assert_eq!(e.config.bo.mc_samples, 64);
        assert_eq!(e.config.bo.fit_restarts, BoSettings::default().fit_restarts);
    }

    #[test]
    fn semantic_errors_name_key_and_line() {
        let (line, key, _) = rejected(&GOOD.replace("64", "1"));
        assert_eq!((line, key.as_str()), (6, "bo.mc_samples"));
        let (line, key, msg) = rejected(&GOOD.replace("sphere-composite", "nope"));
        assert_eq!((line, key.as_str()), (3, "benchmark"));
        assert!(msg.contains("nope"));
    }

    #[test]
    fn type_errors_name_key_and_line() {
        let (line, key, _) = rejected(&GOOD.replace("64", "\"many\""));
        assert_eq!((line, key.as_str()), (6, "bo.mc_samples"));
        let (_, _, msg) = rejected(&GOOD.replace("\"iterations\"", "\"iters\""));
        assert!(msg.contains("iters"), "{msg}");
    }

    #[test]
    fn overrides_are_validated() {
        let o = Overrides {
            parallel: Some(0),
            ..Overrides::default()
        };
        let err = prepare(GOOD, "cfg.json", Path::new("."), &o).unwrap_err();
        assert!(err.to_string().contains("key 'parallel'"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn locate_follows_parents() {
        let text = "{\n \"a\": {\"k\": 1},\n \"b\": {\n  \"k\": 2}}";
        assert_eq!(locate_key(text, "b.k"), 4);
        assert_eq!(locate_key(text, "a.k"), 2);
        assert_eq!(locate_key(text, "c"), 1);
    }
}
