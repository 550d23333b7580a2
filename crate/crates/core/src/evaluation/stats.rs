//! Order statistics, moments and log-log slope fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear-interpolation quantile of an unsorted sample (`p` in `[0, 1]`).
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    sorted_quantile(&s, p)
}

pub fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Least-squares slope of `log(value)` against `log(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
}

pub fn log_log_slope(ns: &[f64], values: &[f64]) -> Result<RateFit> {
    if ns.len() != values.len() {
        return Err(Error::invalid("sample sizes and values differ in length"));
    }
    if ns.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 sample sizes to fit a rate, got {}",
            ns.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::DegenerateRate(format!("loss {v} has no logarithm")));
    }
    let lx: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("sample sizes must not all be equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let stderr = (rss / (k - 2.0) / sxx).sqrt();
    Ok(RateFit {
        slope,
        stderr,
        intercept,
    })
}

/// Sample skewness `m3 / m2^{3/2}` and excess kurtosis `m4 / m2² − 3`
/// (biased moment estimators).
pub fn skewness_kurtosis(values: &[f64]) -> (f64, f64) {
    let mu = mean(values);
    let n = values.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mu;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}
