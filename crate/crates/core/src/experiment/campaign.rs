//! Multi-start campaigns: every variant from every start point.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bo::{initial_design, run, BoConfig, Incumbent, TimingColumn, Variant};
use crate::error::{Error, Result};
use crate::experiment::config::{Experiment, ExperimentConfig};
use crate::experiment::report::{compare, Comparison};
use crate::seeds;

pub const CAMPAIGN_SCHEMA: &str = "composite-bo/campaign@1";
pub const MANIFEST_SCHEMA: &str = "composite-bo/run@1";

const STREAM_STARTS: u64 = 0;
const STREAM_CELLS: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    /// All iterations ran.
    Completed,
    /// The run was truncated by an evaluation failure.
    Truncated,
    /// The run could not start.
    Failed,
}

/// One (variant, start) cell as listed in the campaign index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub variant: Variant,
    pub start: usize,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub status: CellStatus,
    /// Trace CSV relative to the index; absent when the run never started.
    pub trace: Option<PathBuf>,
    pub manifest: PathBuf,
    pub records: usize,
    pub final_best: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignIndex {
    pub schema: String,
    pub benchmark: String,
    pub config: ExperimentConfig,
    pub cells: Vec<CellRecord>,
    /// Final-cost comparison across variants, with checks flagged for review.
    pub comparison: Comparison,
}

impl CampaignIndex {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let index: CampaignIndex = serde_json::from_str(&text)?;
        if index.schema != CAMPAIGN_SCHEMA {
            return Err(Error::config(format!(
                "{}: unsupported index schema '{}'",
                path.display(),
                index.schema
            )));
        }
        Ok(index)
    }

    pub fn all_completed(&self) -> bool {
        self.cells.iter().all(|c| c.status == CellStatus::Completed)
    }
}

/// Per-run manifest written next to each trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub benchmark: String,
    pub variant: Variant,
    pub start: usize,
    pub seed: u64,
    pub config: BoConfig,
    pub status: CellStatus,
    pub error: Option<String>,
    pub records: usize,
    pub incumbent: Option<Incumbent>,
    pub evaluations: usize,
    pub wallclock_ms: f64,
}

#[derive(Debug, Clone)]
pub struct CampaignOutcome {
    pub index: CampaignIndex,
    pub index_path: PathBuf,
}

/// Start points of the campaign and the seed shared by the cells at each.
pub fn campaign_starts(exp: &Experiment) -> Result<Vec<(Vec<f64>, u64)>> {
    let c = &exp.config;
    let points = initial_design(
        &exp.benchmark.domain,
        &c.campaign,
        seeds::derive(c.seed, &[STREAM_STARTS]),
    )?;
    Ok(points
        .into_iter()
        .enumerate()
        .map(|(k, x)| (x, seeds::derive(c.seed, &[STREAM_CELLS, k as u64])))
        .collect())
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn run_cell(exp: &Experiment, out: &Path, variant: Variant, start: usize, x0: &[f64], seed: u64) -> Result<CellRecord> {
    let bench = &exp.benchmark;
    let config = exp.config.bo_config(variant, seed, x0.to_vec());
    let dir = PathBuf::from("runs").join(variant.name());
    std::fs::create_dir_all(out.join(&dir)).map_err(|e| Error::io(out.join(&dir), e))?;
    let stem = format!("start_{start:03}");
    let trace_rel = dir.join(format!("{stem}.csv"));
    let manifest_rel = dir.join(format!("{stem}.json"));

    let oracle = bench.oracle();
    let objective = variant.is_composite().then(|| bench.objective.clone());
    let clock = Instant::now();
    let result = run(&oracle, objective, &bench.domain, &config);
    let wallclock_ms = clock.elapsed().as_secs_f64() * 1e3;

    let (status, error, trace) = match result {
        Ok(trace) => {
            let status = if trace.error.is_some() {
                CellStatus::Truncated
            } else {
                CellStatus::Completed
            };
            (status, trace.error.clone(), Some(trace))
        }
        Err(e) => (CellStatus::Failed, Some(e.to_string()), None),
    };
    if let Some(t) = &trace {
        t.write_csv(&out.join(&trace_rel), TimingColumn::Zeroed)?;
        write(&out.join(dir.join(format!("{stem}.timing.csv"))), &t.timing_csv())?;
    }
    let incumbent = trace.as_ref().and_then(|t| t.incumbent());
    let records = trace.as_ref().map_or(0, |t| t.records.len());
    let manifest = RunManifest {
        schema: MANIFEST_SCHEMA.to_string(),
        benchmark: bench.name.clone(),
        variant,
        start,
        seed,
        config,
        status,
        error: error.clone(),
        records,
        incumbent: incumbent.clone(),
        evaluations: oracle.eval_count(),
        wallclock_ms,
    };
    write(&out.join(&manifest_rel), &serde_json::to_string_pretty(&manifest)?)?;
    Ok(CellRecord {
        variant,
        start,
        seed,
        x0: x0.to_vec(),
        status,
        trace: trace.is_some().then_some(trace_rel),
        manifest: manifest_rel,
        records,
        final_best: incumbent.map(|i| i.f),
        error,
    })
}

/// Run every cell on a pool of `config.parallelism()` threads, then write
/// `campaign.json` into `out`. Cells that fail keep their manifests; the
/// index records their status.
pub fn run_campaign(exp: &Experiment, out: &Path) -> Result<CampaignOutcome> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let starts = campaign_starts(exp)?;
    let cells: Vec<(Variant, usize)> = exp
        .config
        .variants
        .iter()
        .flat_map(|&v| (0..starts.len()).map(move |k| (v, k)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(exp.config.parallelism())
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let results: Vec<Result<CellRecord>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(v, k)| run_cell(exp, out, v, k, &starts[k].0, starts[k].1))
            .collect()
    });
    let mut records = Vec::with_capacity(results.len());
    for (r, &(variant, start)) in results.into_iter().zip(&cells) {
        records.push(match r {
            Ok(c) => c,
            // only artifact writes fail here
            Err(e) => CellRecord {
                variant,
                start,
                seed: starts[start].1,
                x0: starts[start].0.clone(),
                status: CellStatus::Failed,
                trace: None,
                manifest: PathBuf::from("runs").join(variant.name()).join(format!("start_{start:03}.json")),
                records: 0,
                final_best: None,
                error: Some(e.to_string()),
            },
        });
    }
    let mut finals: BTreeMap<Variant, Vec<f64>> = BTreeMap::new();
    for c in &records {
        if let (CellStatus::Completed, Some(f)) = (c.status, c.final_best) {
            finals.entry(c.variant).or_default().push(f);
        }
    }
    let index = CampaignIndex {
        schema: CAMPAIGN_SCHEMA.to_string(),
        benchmark: exp.benchmark.name.clone(),
        config: exp.config.clone(),
        cells: records,
        comparison: compare(&finals),
    };
    let index_path = out.join("campaign.json");
    write(&index_path, &serde_json::to_string_pretty(&index)?)?;
    Ok(CampaignOutcome { index, index_path })
}
