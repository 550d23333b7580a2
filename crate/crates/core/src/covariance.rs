//! Empirical moments and the truncated, Tikhonov-shifted cross-covariance
//! inverse used by the denoising estimator.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pinv, sym_condition_number, ThinSvd};

/// Largest accepted condition number of `Σ̂`.
pub const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimates {
    pub x_bar: DVector<f64>,
    pub y_bar: DVector<f64>,
    /// `Σ̂`, divisor n.
    pub sigma: DMatrix<f64>,
    pub sigma_inv: DMatrix<f64>,
    /// `Σ̂_XY`, m×q, divisor n.
    pub sigma_xy: DMatrix<f64>,
    /// Transpose of the Moore–Penrose pseudo-inverse of `Σ̂_XY` (m×q), so that
    /// `(x_i − X̄)ᵀ C (y_i − Ȳ)` is a scalar.
    pub cross_inv: DMatrix<f64>,
    pub condition: f64,
}

fn check_finite(name: &str, a: &DMatrix<f64>) -> Result<()> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{name} has non-finite entries")));
    }
    Ok(())
}

pub fn column_means(a: &DMatrix<f64>) -> DVector<f64> {
    let n = a.nrows() as f64;
    DVector::from_iterator(a.ncols(), a.column_iter().map(|c| c.sum() / n))
}

/// Subtracts `mean` from every row.
pub fn center(a: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut out = a.clone();
    for mut row in out.row_iter_mut() {
        row -= mean.transpose();
    }
    out
}

/// Column means, covariance, cross-covariance and their inverses.
pub fn empirical_moments(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<MomentEstimates> {
    moments(x, y, false)
}

/// As [`empirical_moments`], with `1e-8 · trace(Σ̂) / m` added to the
/// diagonal of `Σ̂` before conditioning is checked.
pub fn empirical_moments_with_jitter(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> Result<MomentEstimates> {
    moments(x, y, true)
}

fn moments(x: &DMatrix<f64>, y: &DMatrix<f64>, jitter: bool) -> Result<MomentEstimates> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 observations, got {n}"
        )));
    }
    if y.nrows() != n {
        return Err(Error::invalid(format!(
            "X has {n} rows but Y has {}",
            y.nrows()
        )));
    }
    if x.ncols() == 0 || y.ncols() == 0 {
        return Err(Error::invalid("X and Y need at least one column"));
    }
    check_finite("X", x)?;
    check_finite("Y", y)?;

    let x_bar = column_means(x);
    let y_bar = column_means(y);
    let dx = center(x, &x_bar);
    let dy = center(y, &y_bar);
    let nf = n as f64;
    let mut sigma = (dx.transpose() * &dx) / nf;
    // exact symmetry
    sigma = (&sigma + sigma.transpose()) * 0.5;
    if jitter {
        let m = sigma.nrows();
        let bump = 1e-8 * sigma.trace() / m as f64;
        for i in 0..m {
            sigma[(i, i)] += bump;
        }
    }
    let sigma_xy = (dx.transpose() * &dy) / nf;

    let condition = sym_condition_number(&sigma);
    if condition.is_nan() || condition > MAX_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    let sigma_inv = spd_inverse(&sigma)?;
    let cross_inv = pinv(&sigma_xy).transpose();

    Ok(MomentEstimates {
        x_bar,
        y_bar,
        sigma,
        sigma_inv,
        sigma_xy,
        cross_inv,
        condition,
    })
}

fn spd_inverse(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(ch) = sigma.clone().cholesky() {
        return Ok(ch.inverse());
    }
    let m = sigma.nrows();
    let bump = 1e-8 * sigma.trace() / m as f64;
    let jittered = sigma + DMatrix::identity(m, m) * bump;
    jittered
        .cholesky()
        .map(|ch| ch.inverse())
        .ok_or(Error::IllConditioned {
            condition: f64::INFINITY,
        })
}

/// Singular-value threshold `tau` and Tikhonov shift `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaConfig {
    pub tau: f64,
    pub eps: f64,
}

impl ThetaConfig {
    pub fn new(tau: f64, eps: f64) -> Result<Self> {
        let cfg = ThetaConfig { tau, eps };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfiguration(format!(
                "tau must be nonnegative, got {}",
                self.tau
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidConfiguration(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        Ok(())
    }

    /// `tau = 0.1 · σ_max`, `eps = 1e-6 · σ_max` of the matrix being reduced.
    pub fn adaptive(cross_inv: &DMatrix<f64>) -> Self {
        let smax = ThinSvd::new(cross_inv)
            .singular_values
            .iter()
            .cloned()
            .fold(0.0, f64::max);
        ThetaConfig {
            tau: 0.1 * smax,
            eps: (1e-6 * smax).max(1e-12),
        }
    }
}

/// How the denoising estimator picks its `ThetaConfig`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaChoice {
    #[default]
    Adaptive,
    Fixed(ThetaConfig),
}

impl ThetaChoice {
    pub fn resolve(&self, cross_inv: &DMatrix<f64>) -> Result<ThetaConfig> {
        match self {
            ThetaChoice::Adaptive => Ok(ThetaConfig::adaptive(cross_inv)),
            ThetaChoice::Fixed(cfg) => {
                cfg.validate()?;
                Ok(*cfg)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaMatrix {
    pub theta: DMatrix<f64>,
    /// Number of singular values `≥ tau`.
    pub kept_rank: usize,
    /// The zeroed singular values, largest first.
    pub truncated_values: Vec<f64>,
    /// Diagonal of the regularized middle factor `S* + eps·I`.
    pub middle: Vec<f64>,
    pub config: ThetaConfig,
}

/// SVD `C = U S Vᵀ`, zero every singular value below `tau`, add `eps` to
/// every diagonal entry of the middle factor, and rebuild `U S* Vᵀ`.
///
/// `eps = 0` is accepted here (pure truncation) even though [`ThetaConfig`]
/// validation requires a positive shift.
pub fn compute_theta(cross_inv: &DMatrix<f64>, cfg: ThetaConfig) -> Result<ThetaMatrix> {
    if !(cfg.tau >= 0.0 && cfg.eps >= 0.0 && cfg.tau.is_finite() && cfg.eps.is_finite()) {
        return Err(Error::InvalidConfiguration(format!(
            "invalid theta config tau={} eps={}",
            cfg.tau, cfg.eps
        )));
    }
    check_finite("cross-covariance inverse", cross_inv)?;
    let svd = ThinSvd::new(cross_inv);
    let mut truncated_values = Vec::new();
    let mut kept_rank = 0;
    let middle = svd.singular_values.map(|s| {
        if s < cfg.tau {
            truncated_values.push(s);
            cfg.eps
        } else {
            kept_rank += 1;
            s + cfg.eps
        }
    });
    let theta = svd.reconstruct_with(&middle);
    Ok(ThetaMatrix {
        theta,
        kept_rank,
        truncated_values,
        middle: middle.iter().cloned().collect(),
        config: cfg,
    })
}
