use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{
    comparison_report, rate_estimate, CellSummary, LossRecord, Normality, RateFit, SweepResult,
};
use crate::error::{Error, Result};
use crate::metric::MetricTag;
use crate::regression::EstimatorKind;
use crate::simulation::format_exact;

pub const SCHEMA_VERSION: u32 = 1;
pub const SWEEP_COLUMNS: [&str; 5] = ["estimator", "n", "replicate", "loss", "skipped"];

/// Writes one line per record; skipped records have an empty loss.
pub fn write_sweep_csv<W: Write>(result: &SweepResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", SWEEP_COLUMNS.join(","))?;
    for r in &result.records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.estimator,
            r.n,
            r.replicate,
            r.loss.map(format_exact).unwrap_or_default(),
            u8::from(r.skipped())
        )?;
    }
    Ok(())
}

/// Parses a sweep CSV. Columns may appear in any order; a missing column is
/// reported by name. The metric is not stored and is set to `metric`.
pub fn read_sweep_csv<R: BufRead>(input: R, metric: MetricTag) -> Result<SweepResult> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(h) => h.map_err(|e| Error::invalid(e.to_string()))?,
        None => return Err(Error::invalid("empty sweep CSV")),
    };
    let names: Vec<&str> = header.trim().split(',').map(str::trim).collect();
    let mut idx = [0usize; 5];
    for (slot, col) in idx.iter_mut().zip(SWEEP_COLUMNS) {
        *slot = names
            .iter()
            .position(|h| *h == col)
            .ok_or_else(|| Error::invalid(format!("missing column \"{col}\"")))?;
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::invalid(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let row = i + 2;
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != names.len() {
            return Err(Error::invalid(format!(
                "line {row}: expected {} fields, got {}",
                names.len(),
                f.len()
            )));
        }
        let bad = |col: &str| {
            Error::invalid(format!(
                "line {row}: invalid {col} \"{}\"",
                f[idx[SWEEP_COLUMNS.iter().position(|c| *c == col).unwrap()]]
            ))
        };
        let estimator: EstimatorKind = f[idx[0]].parse().map_err(|_| bad("estimator"))?;
        let n: usize = f[idx[1]].parse().map_err(|_| bad("n"))?;
        let replicate: usize = f[idx[2]].parse().map_err(|_| bad("replicate"))?;
        let skipped = match f[idx[4]] {
            "0" | "false" => false,
            "1" | "true" => true,
            _ => return Err(bad("skipped")),
        };
        let loss = if skipped {
            None
        } else {
            let v: f64 = f[idx[3]].parse().map_err(|_| bad("loss"))?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad("loss"));
            }
            Some(v)
        };
        records.push(LossRecord {
            estimator,
            n,
            replicate,
            loss,
        });
    }
    if records.is_empty() {
        return Err(Error::invalid("sweep CSV has no records"));
    }
    let mut estimators = Vec::new();
    for r in &records {
        if !estimators.contains(&r.estimator) {
            estimators.push(r.estimator);
        }
    }
    let mut n_grid: Vec<usize> = records.iter().map(|r| r.n).collect();
    n_grid.sort_unstable();
    n_grid.dedup();
    let replicates = records.iter().map(|r| r.replicate).max().unwrap_or(0) + 1;
    Ok(SweepResult {
        metric,
        estimators,
        n_grid,
        replicates,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub estimator: EstimatorKind,
    pub fit: Option<RateFit>,
    /// Why no fit was produced.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderEntry {
    pub estimator: EstimatorKind,
    pub mean_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub metric: MetricTag,
    pub estimators: Vec<EstimatorKind>,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub skipped: usize,
    pub aggregates: Vec<CellSummary>,
    pub rates: Vec<RateEntry>,
    pub ordering: Vec<OrderEntry>,
    pub normality: Option<Normality>,
}

impl Summary {
    pub fn new(result: &SweepResult, normality: Option<Normality>) -> Self {
        let rates = result
            .estimators
            .iter()
            .map(|&estimator| match rate_estimate(result, estimator) {
                Ok(fit) => RateEntry {
                    estimator,
                    fit: Some(fit),
                    error: None,
                },
                Err(e) => RateEntry {
                    estimator,
                    fit: None,
                    error: Some(e.to_string()),
                },
            })
            .collect();
        let ordering = match comparison_report(result) {
            Ok(rep) => rep
                .ordering
                .into_iter()
                .map(|(estimator, m)| OrderEntry {
                    estimator,
                    mean_loss: m.is_finite().then_some(m),
                })
                .collect(),
            Err(_) => Vec::new(),
        };
        Summary {
            schema_version: SCHEMA_VERSION,
            metric: result.metric,
            estimators: result.estimators.clone(),
            n_grid: result.n_grid.clone(),
            replicates: result.replicates,
            skipped: result.total_skipped(),
            aggregates: result.aggregates(),
            rates,
            ordering,
            normality,
        }
    }
}

/// Pretty-printed JSON summary with a trailing newline.
pub fn summary_json(result: &SweepResult, normality: Option<Normality>) -> String {
    let mut s =
        serde_json::to_string_pretty(&Summary::new(result, normality)).expect("summary serializes");
    s.push('\n');
    s
}
