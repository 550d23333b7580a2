use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{stats, SweepResult};
use crate::error::{Error, Result};
use crate::regression::EstimatorKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub estimator: EstimatorKind,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    /// Replicates at this n where this estimator had the lowest loss.
    pub wins: usize,
    pub completed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// n-major, estimators in listed order.
    pub rows: Vec<ReportRow>,
    /// Estimators ranked by mean loss over all cells, best first.
    pub ordering: Vec<(EstimatorKind, f64)>,
}

/// Per-n losses and win counts plus an overall ranking. Ties (in a single
/// replicate or in the ranking) go to the estimator listed first.
pub fn comparison_report(result: &SweepResult) -> Result<Report> {
    if result.estimators.len() < 2 {
        return Err(Error::invalid("a comparison needs at least 2 estimators"));
    }
    let k = result.estimators.len();
    let mut rows = Vec::with_capacity(k * result.n_grid.len());
    for &n in &result.n_grid {
        let mut wins = vec![0usize; k];
        for r in 0..result.replicates {
            let mut best: Option<(usize, f64)> = None;
            for (i, &est) in result.estimators.iter().enumerate() {
                let loss = result
                    .records
                    .iter()
                    .find(|rec| rec.estimator == est && rec.n == n && rec.replicate == r)
                    .and_then(|rec| rec.loss);
                if let Some(l) = loss {
                    if best.is_none_or(|(_, b)| l < b) {
                        best = Some((i, l));
                    }
                }
            }
            if let Some((i, _)) = best {
                wins[i] += 1;
            }
        }
        for (i, &est) in result.estimators.iter().enumerate() {
            let l = result.losses(est, n);
            rows.push(ReportRow {
                n,
                estimator: est,
                mean: (!l.is_empty()).then(|| stats::mean(&l)),
                median: (!l.is_empty()).then(|| stats::median(&l)),
                wins: wins[i],
                completed: l.len(),
            });
        }
    }
    let mut ordering: Vec<(EstimatorKind, f64)> = result
        .estimators
        .iter()
        .map(|&est| {
            let all: Vec<f64> = result
                .records
                .iter()
                .filter(|r| r.estimator == est)
                .filter_map(|r| r.loss)
                .collect();
            let m = if all.is_empty() {
                f64::INFINITY
            } else {
                stats::mean(&all)
            };
            (est, m)
        })
        .collect();
    ordering.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(Report { rows, ordering })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6e}"))
}

impl Report {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>6}  {:<6}  {:>13}  {:>13}  {:>5}  {:>5}",
            "n", "est", "mean", "median", "wins", "done"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>6}  {:<6}  {:>13}  {:>13}  {:>5}  {:>5}",
                r.n,
                r.estimator.as_str(),
                cell(r.mean),
                cell(r.median),
                r.wins,
                r.completed
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>4}  {:<6}  {:>13}", "rank", "est", "mean loss");
        for (i, (est, m)) in self.ordering.iter().enumerate() {
            let _ = writeln!(
                s,
                "{:>4}  {:<6}  {:>13}",
                i + 1,
                est.as_str(),
                cell(m.is_finite().then_some(*m))
            );
        }
        s
    }
}
