//! Incumbent-curve aggregates over a campaign.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bo::{RunTrace, Variant};
use crate::error::{Error, Result};
use crate::experiment::campaign::CampaignIndex;
use crate::stats::{mean, median, percentile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub variant: Variant,
    pub iteration: usize,
    /// Traces that reached this iteration.
    pub runs: usize,
    pub mean: f64,
    pub median: f64,
    pub p10: f64,
    pub p90: f64,
}

/// Per-iteration statistics of the best-so-far curves of each variant.
pub fn aggregate(curves: &BTreeMap<Variant, Vec<Vec<(usize, f64)>>>) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    for (variant, runs) in curves {
        let mut by_iter: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for curve in runs {
            for &(it, best) in curve {
                by_iter.entry(it).or_default().push(best);
            }
        }
        for (iteration, v) in by_iter {
            rows.push(AggregateRow {
                variant: *variant,
                iteration,
                runs: v.len(),
                mean: mean(&v),
                median: median(&v),
                p10: percentile(&v, 10.0),
                p90: percentile(&v, 90.0),
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalSummary {
    pub variant: Variant,
    pub runs: usize,
    pub mean: f64,
    pub median: f64,
    pub p10: f64,
    pub p90: f64,
    /// `p90 - p10`.
    pub spread: f64,
}

/// A qualitative expectation about the final costs. A failed check is a
/// reason to look at the campaign, not an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub finals: Vec<FinalSummary>,
    pub checks: Vec<ReviewCheck>,
    pub needs_review: bool,
}

/// Summaries of final incumbents and the variant-ordering checks that apply
/// to the variants present.
pub fn compare(finals: &BTreeMap<Variant, Vec<f64>>) -> Comparison {
    let summaries: Vec<FinalSummary> = finals
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(variant, v)| {
            let (p10, p90) = (percentile(v, 10.0), percentile(v, 90.0));
            FinalSummary {
                variant: *variant,
                runs: v.len(),
                mean: mean(v),
                median: median(v),
                p10,
                p90,
                spread: p90 - p10,
            }
        })
        .collect();
    let get = |v: Variant| summaries.iter().find(|s| s.variant == v);
    let mut checks = Vec::new();
    if let (Some(b), Some(s)) = (get(Variant::Bois), get(Variant::Sbo)) {
        checks.push(ReviewCheck {
            name: "mean final cost bois <= sbo".into(),
            passed: b.mean <= s.mean,
            detail: format!("bois {} vs sbo {}", b.mean, s.mean),
        });
    }
    for v in [Variant::Bois, Variant::Mcbo] {
        if let (Some(c), Some(s)) = (get(v), get(Variant::Sbo)) {
            checks.push(ReviewCheck {
                name: format!("final-cost spread {v} < sbo"),
                passed: c.spread < s.spread,
                detail: format!("{v} {} vs sbo {}", c.spread, s.spread),
            });
        }
    }
    let needs_review = checks.iter().any(|c| !c.passed);
    Comparison {
        finals: summaries,
        checks,
        needs_review,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub index: PathBuf,
    pub traces: usize,
    pub missing: Vec<PathBuf>,
    pub comparison: Comparison,
}

#[derive(Debug, Clone)]
pub struct ReportOutcome {
    pub rows: Vec<AggregateRow>,
    pub summary: ReportSummary,
}

impl ReportOutcome {
    pub fn complete(&self) -> bool {
        self.summary.missing.is_empty()
    }
}

pub fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut s = String::from("variant,iter,runs,mean,median,p10,p90\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.variant, r.iteration, r.runs, r.mean, r.median, r.p10, r.p90
        );
    }
    s
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Read every trace listed in a campaign index and write `aggregate.csv`,
/// `long.csv` and `report.json` into `out`. Missing traces are skipped and
/// listed in the outcome.
pub fn run_report(index_path: &Path, out: &Path) -> Result<ReportOutcome> {
    let index = CampaignIndex::load(index_path)?;
    let root = index_path.parent().unwrap_or(Path::new("."));
    let mut curves: BTreeMap<Variant, Vec<Vec<(usize, f64)>>> = BTreeMap::new();
    let mut long = String::from("variant,start,iter,best_f\n");
    let mut missing = Vec::new();
    let mut traces = 0;
    for cell in &index.cells {
        let Some(rel) = &cell.trace else {
            missing.push(root.join(&cell.manifest));
            continue;
        };
        let path = root.join(rel);
        if !path.exists() {
            missing.push(path);
            continue;
        }
        let curve = RunTrace::read_best_curve(&path)?;
        for (it, best) in &curve {
            let _ = writeln!(long, "{},{},{it},{best}", cell.variant, cell.start);
        }
        curves.entry(cell.variant).or_default().push(curve);
        traces += 1;
    }
    if index.cells.iter().all(|c| c.trace.is_none()) {
        return Err(Error::config(format!(
            "{}: index lists no completed traces",
            index_path.display()
        )));
    }
    let finals = curves
        .iter()
        .map(|(v, cs)| (*v, cs.iter().filter_map(|c| c.last().map(|p| p.1)).collect()))
        .collect();
    let rows = aggregate(&curves);
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(&out.join("aggregate.csv"), &aggregate_csv(&rows))?;
    write(&out.join("long.csv"), &long)?;
    let summary = ReportSummary {
        index: index_path.to_path_buf(),
        traces,
        missing,
        comparison: compare(&finals),
    };
    write(&out.join("report.json"), &serde_json::to_string_pretty(&summary)?)?;
    Ok(ReportOutcome { rows, summary })
}
