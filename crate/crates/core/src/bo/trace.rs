use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bo::config::BoConfig;
use crate::domain::Dataset;
use crate::error::{Error, Result};

/// One oracle evaluation in a run. Model predictions are absent for
/// initial-design points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub f_obs: f64,
    pub m_f: Option<f64>,
    pub sigma_f: Option<f64>,
    pub af: Option<f64>,
    pub wallclock_ms: f64,
    pub best_f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub iteration: usize,
    pub x: Vec<f64>,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub config: BoConfig,
    pub dim_x: usize,
    pub dim_y: usize,
    pub records: Vec<TraceRecord>,
    /// Set when the run stopped early.
    pub error: Option<String>,
}

/// Whether the trace CSV carries measured times or zeros (keeping the file
/// byte-reproducible; times then go to a separate file).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimingColumn {
    Measured,
    Zeroed,
}

fn push_opt(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        let _ = write!(out, "{v}");
    }
}

impl RunTrace {
    pub fn new(config: BoConfig, dim_x: usize, dim_y: usize) -> Self {
        Self {
            config,
            dim_x,
            dim_y,
            records: Vec::new(),
            error: None,
        }
    }

    pub(crate) fn push(
        &mut self,
        x: Vec<f64>,
        y: Vec<f64>,
        f_obs: f64,
        prediction: Option<(f64, f64, f64)>,
        wallclock_ms: f64,
    ) {
        let best_f = self
            .records
            .last()
            .map_or(f_obs, |r| if f_obs < r.best_f { f_obs } else { r.best_f });
        let (m_f, sigma_f, af) = match prediction {
            Some((m, s, a)) => (Some(m), Some(s), Some(a)),
            None => (None, None, None),
        };
        self.records.push(TraceRecord {
            iteration: self.records.len(),
            x,
            y,
            f_obs,
            m_f,
            sigma_f,
            af,
            wallclock_ms,
            best_f,
        });
    }

    pub fn incumbent(&self) -> Option<Incumbent> {
        let mut best: Option<&TraceRecord> = None;
        for r in &self.records {
            if best.is_none_or(|b| r.f_obs < b.f_obs) {
                best = Some(r);
            }
        }
        best.map(|r| Incumbent {
            iteration: r.iteration,
            x: r.x.clone(),
            f: r.f_obs,
        })
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["iter".to_string()];
        cols.extend((1..=self.dim_x).map(|i| format!("x_{i}")));
        cols.extend((1..=self.dim_y).map(|i| format!("y_{i}")));
        cols.extend(
            ["f_obs", "m_f", "sigma_f", "af", "wallclock_ms", "best_f"]
                .iter()
                .map(|s| s.to_string()),
        );
        cols.join(",")
    }

    /// Trace as CSV with columns
    /// `iter, x_1..x_dx, y_1..y_dy, f_obs, m_f, sigma_f, af, wallclock_ms, best_f`.
    pub fn to_csv(&self, timing: TimingColumn) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{}", r.iteration);
            for v in r.x.iter().chain(&r.y) {
                let _ = write!(out, ",{v}");
            }
            let _ = write!(out, ",{}", r.f_obs);
            for v in [r.m_f, r.sigma_f, r.af] {
                out.push(',');
                push_opt(&mut out, v);
            }
            match timing {
                TimingColumn::Measured => {
                    let _ = write!(out, ",{}", r.wallclock_ms);
                }
                TimingColumn::Zeroed => out.push_str(",0"),
            }
            let _ = writeln!(out, ",{}", r.best_f);
        }
        out
    }

    /// `iter,wallclock_ms` for every record.
    pub fn timing_csv(&self) -> String {
        let mut out = String::from("iter,wallclock_ms\n");
        for r in &self.records {
            let _ = writeln!(out, "{},{}", r.iteration, r.wallclock_ms);
        }
        out
    }

    pub fn write_csv(&self, path: &Path, timing: TimingColumn) -> Result<()> {
        std::fs::write(path, self.to_csv(timing)).map_err(|e| Error::io(path, e))
    }

    /// Read back the `iter` and `best_f` columns of a trace CSV.
    pub fn read_best_curve(path: &Path) -> Result<Vec<(usize, f64)>> {
        let (header, rows) = read_table(path)?;
        let (i_iter, i_best) = (column(path, &header, "iter")?, column(path, &header, "best_f")?);
        Ok(rows.iter().map(|r| (r[i_iter] as usize, r[i_best])).collect())
    }

    /// The `x_*` and `y_*` columns of a trace CSV as a dataset.
    pub fn read_dataset(path: &Path) -> Result<Dataset> {
        let (header, rows) = read_table(path)?;
        let pick = |prefix: &str| -> Vec<usize> {
            (1..)
                .map_while(|i| header.iter().position(|h| *h == format!("{prefix}_{i}")))
                .collect()
        };
        let (xs, ys) = (pick("x"), pick("y"));
        if xs.is_empty() || ys.is_empty() {
            return Err(Error::config(format!(
                "{}: trace has no x or y columns",
                path.display()
            )));
        }
        let select = |r: &Vec<f64>, idx: &[usize]| idx.iter().map(|&i| r[i]).collect();
        Dataset::new(
            rows.iter().map(|r| select(r, &xs)).collect(),
            rows.iter().map(|r| select(r, &ys)).collect(),
        )
    }
}

fn column(path: &Path, header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::config(format!("{}: missing column {name}", path.display())))
}

/// Header and numeric rows of a trace CSV. Empty fields read as NaN.
fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::config(format!("{}: empty trace file", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(n, l)| {
            let bad = || Error::config(format!("{}:{}: malformed row", path.display(), n + 2));
            let row: Vec<f64> = l
                .split(',')
                .map(|f| if f.is_empty() { Ok(f64::NAN) } else { f.parse().map_err(|_| bad()) })
                .collect::<Result<_>>()?;
            if row.len() != header.len() {
                return Err(bad());
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

/// Best-so-far observed `f` after each record.
pub fn incumbent_curve(trace: &RunTrace) -> Vec<(usize, f64)> {
    let mut best = f64::INFINITY;
    trace
        .records
        .iter()
        .map(|r| {
            if r.f_obs < best {
                best = r.f_obs;
            }
            (r.iteration, best)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bo::config::Variant;

    fn trace_of(values: &[f64]) -> RunTrace {
        let mut t = RunTrace::new(BoConfig::new(Variant::Bois, 0), 1, 0);
        for (i, v) in values.iter().enumerate() {
            t.push(vec![i as f64], vec![], *v, None, 1.0);
        }
        t
    }

    #[test]
    fn running_minimum() {
        let curve = incumbent_curve(&trace_of(&[3.0, 1.0, 2.0]));
        assert_eq!(curve, vec![(0, 3.0), (1, 1.0), (2, 1.0)]);
        assert_eq!(incumbent_curve(&trace_of(&[5.0])), vec![(0, 5.0)]);
        let dec = [4.0, 3.0, 2.5, -1.0];
        let curve: Vec<f64> = incumbent_curve(&trace_of(&dec)).into_iter().map(|c| c.1).collect();
        assert_eq!(curve, dec);
    }

    #[test]
    fn csv_layout() {
        let mut t = RunTrace::new(BoConfig::new(Variant::Bois, 1), 2, 1);
        t.push(vec![0.5, 1.0], vec![2.0], 3.0, None, 1.5);
        t.push(vec![0.25, 0.0], vec![1.0], 1.0, Some((1.1, 0.2, 0.7)), 2.5);
        let csv = t.to_csv(TimingColumn::Zeroed);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "iter,x_1,x_2,y_1,f_obs,m_f,sigma_f,af,wallclock_ms,best_f");
        assert_eq!(lines[1], "0,0.5,1,2,3,,,,0,3");
        assert_eq!(lines[2], "1,0.25,0,1,1,1.1,0.2,0.7,0,1");
        assert!(t.to_csv(TimingColumn::Measured).lines().nth(2).unwrap().contains(",2.5,"));
    }
}
