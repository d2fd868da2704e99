//! Side-by-side moment estimates from one trained GP bank.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bo::{random_points, RunTrace};
use crate::domain::Dataset;
use crate::error::{Error, Result};
use crate::experiment::config::Experiment;
use crate::gp::{fit_bank, FitOptions, GpBank};
use crate::moments::{bois_moments, mc_moments, ReferencePolicy};
use crate::seeds;
use crate::stats::{median, percentile};

pub const PARITY_SCHEMA: &str = "composite-bo/parity@1";

const STREAM_TRAIN: u64 = 10;
const STREAM_QUERY: u64 = 11;
const STREAM_MC: u64 = 12;
const STREAM_FIT: u64 = 13;

/// Outputs count as locally linear when every posterior std is at most this
/// fraction of the magnitude of its mean.
pub const LOCAL_LINEARITY_RATIO: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCell {
    pub samples: usize,
    pub mean: f64,
    pub std: f64,
    /// `std / √samples`.
    pub se: f64,
    pub ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityRow {
    pub x: Vec<f64>,
    /// Largest `σ_y / |m_y|` over the outputs.
    pub max_rel_std: f64,
    pub bois_mean: f64,
    pub bois_std: f64,
    pub bois_ms: f64,
    pub mc: Vec<McCell>,
}

impl ParityRow {
    pub fn local_linear(&self) -> bool {
        self.max_rel_std <= LOCAL_LINEARITY_RATIO
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub samples: usize,
    pub mean_median: f64,
    pub mean_p90: f64,
    pub std_median: f64,
    pub std_p90: f64,
    /// Std discrepancy median over the locally linear rows (NaN if none).
    pub std_median_local: f64,
    pub mc_total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParitySummary {
    pub schema: String,
    pub benchmark: String,
    pub seed: u64,
    pub train_points: usize,
    pub query_points: usize,
    pub local_points: usize,
    pub delta: f64,
    pub bank: PathBuf,
    pub discrepancies: Vec<Discrepancy>,
    pub bois_total_ms: f64,
    /// MC time at the largest sample count over BOIS time.
    pub speedup: f64,
    pub mean_median_decreasing: bool,
    pub std_median_decreasing: bool,
}

#[derive(Debug, Clone)]
pub struct ParityReport {
    pub rows: Vec<ParityRow>,
    pub summary: ParitySummary,
}

/// `|a - reference| / |reference|`, with `0/0 = 0`.
pub fn relative_discrepancy(a: f64, reference: f64) -> f64 {
    let d = (a - reference).abs();
    if d == 0.0 {
        0.0
    } else {
        d / reference.abs()
    }
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

fn training_data(exp: &Experiment) -> Result<Dataset> {
    let c = &exp.config;
    let bench = &exp.benchmark;
    if let Some(trace) = &c.parity.trace {
        return RunTrace::read_dataset(&exp.base_dir.join(trace));
    }
    let xs = random_points(&bench.domain, c.parity.train_points, seeds::derive(c.seed, &[STREAM_TRAIN]));
    let ys = xs
        .iter()
        .map(|x| (bench.system)(x))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(xs, ys)
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Fit the bank once, write it to `out/bank.json`, reload it, and estimate
/// moments of `f` with both engines at every query point. Writes
/// `parity.csv` and `parity.json`.
pub fn run_parity(exp: &Experiment, out: &Path) -> Result<ParityReport> {
    let c = &exp.config;
    let p = &c.parity;
    let bench = &exp.benchmark;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let data = training_data(exp)?.within(&bench.domain)?;
    let options = FitOptions {
        restarts: c.bo.fit_restarts,
        noise: c.bo.noise,
        ..FitOptions::default()
    }
    .with_seed(seeds::derive(c.seed, &[STREAM_FIT]))
    .with_domain(bench.domain.clone());
    let fitted = fit_bank(&data, c.bo.kernel, &options)?;
    let bank_path = out.join("bank.json");
    std::fs::write(&bank_path, fitted.to_json()?).map_err(|e| Error::io(&bank_path, e))?;
    let text = std::fs::read_to_string(&bank_path).map_err(|e| Error::io(&bank_path, e))?;
    let bank = GpBank::from_json(&text)?;

    let queries = random_points(&bench.domain, p.query_points, seeds::derive(c.seed, &[STREAM_QUERY]));
    let policy = ReferencePolicy::RelativeOffset { delta: p.delta };
    let obj = bench.objective.as_ref();
    let mut rows = Vec::with_capacity(queries.len());
    for (q, x) in queries.into_iter().enumerate() {
        let post = bank.posterior_at(&x)?;
        let max_rel_std = (0..post.dim())
            .map(|j| post.std(j) / post.mean()[j].abs())
            .fold(0.0, f64::max);
        let t = Instant::now();
        let b = bois_moments(obj, &x, &post, policy)?;
        let bois_ms = ms_since(t);
        let mut mc = Vec::with_capacity(p.samples.len());
        for &s in &p.samples {
            let seed = seeds::derive(c.seed, &[STREAM_MC, s as u64, q as u64]);
            let t = Instant::now();
            let m = mc_moments(obj, &x, &post, s, seed)?;
            let ms = ms_since(t);
            mc.push(McCell {
                samples: s,
                mean: m.mean,
                std: m.std,
                se: m.std / (s as f64).sqrt(),
                ms,
            });
        }
        rows.push(ParityRow {
            x,
            max_rel_std,
            bois_mean: b.mean,
            bois_std: b.std,
            bois_ms,
            mc,
        });
    }

    let discrepancies: Vec<Discrepancy> = p
        .samples
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let dm: Vec<f64> = rows.iter().map(|r| relative_discrepancy(r.bois_mean, r.mc[k].mean)).collect();
            let ds: Vec<f64> = rows.iter().map(|r| relative_discrepancy(r.bois_std, r.mc[k].std)).collect();
            let local: Vec<f64> = rows
                .iter()
                .zip(&ds)
                .filter(|(r, _)| r.local_linear())
                .map(|(_, d)| *d)
                .collect();
            Discrepancy {
                samples: s,
                mean_median: median(&dm),
                mean_p90: percentile(&dm, 90.0),
                std_median: median(&ds),
                std_p90: percentile(&ds, 90.0),
                std_median_local: median(&local),
                mc_total_ms: rows.iter().map(|r| r.mc[k].ms).sum(),
            }
        })
        .collect();
    let bois_total_ms: f64 = rows.iter().map(|r| r.bois_ms).sum();
    let largest = discrepancies
        .iter()
        .max_by_key(|d| d.samples)
        .map_or(f64::NAN, |d| d.mc_total_ms);
    let summary = ParitySummary {
        schema: PARITY_SCHEMA.to_string(),
        benchmark: bench.name.clone(),
        seed: c.seed,
        train_points: data.len(),
        query_points: rows.len(),
        local_points: rows.iter().filter(|r| r.local_linear()).count(),
        delta: p.delta,
        bank: PathBuf::from("bank.json"),
        mean_median_decreasing: strictly_decreasing(
            &discrepancies.iter().map(|d| d.mean_median).collect::<Vec<_>>(),
        ),
        std_median_decreasing: strictly_decreasing(
            &discrepancies.iter().map(|d| d.std_median).collect::<Vec<_>>(),
        ),
        speedup: largest / bois_total_ms,
        bois_total_ms,
        discrepancies,
    };
    write_file(&out.join("parity.csv"), &parity_csv(&rows))?;
    write_file(&out.join("parity.json"), &serde_json::to_string_pretty(&summary)?)?;
    Ok(ParityReport { rows, summary })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One row per query point: `x_*`, `max_rel_std`, the BOIS columns, then
/// `mc<S>_mean, mc<S>_std, mc<S>_se, mc<S>_ms` for each sample count.
pub fn parity_csv(rows: &[ParityRow]) -> String {
    let mut s = String::new();
    let Some(first) = rows.first() else {
        return s;
    };
    let mut cols: Vec<String> = (1..=first.x.len()).map(|i| format!("x_{i}")).collect();
    cols.extend(["max_rel_std", "bois_mean", "bois_std", "bois_ms"].map(String::from));
    for m in &first.mc {
        for field in ["mean", "std", "se", "ms"] {
            cols.push(format!("mc{}_{field}", m.samples));
        }
    }
    s.push_str(&cols.join(","));
    s.push('\n');
    for r in rows {
        let mut vals: Vec<f64> = r.x.clone();
        vals.extend([r.max_rel_std, r.bois_mean, r.bois_std, r.bois_ms]);
        for m in &r.mc {
            vals.extend([m.mean, m.std, m.se, m.ms]);
        }
        let line: Vec<String> = vals.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", line.join(","));
    }
    s
}
