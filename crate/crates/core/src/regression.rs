//! Global Fréchet regression (GFR), its multilabel extension (MGFR) and the
//! denoised multilabel variant (DMGFR).
//!
//! All three estimate the conditional Fréchet mean at a query `x` as
//! `argmin_ω Σ_i w_i(x) d²(Y_i, ω)` and differ only in the weights:
//!
//! * GFR: `w_i = 1 + (x_i − X̄)ᵀ Σ̂⁻¹ (x − X̄)`
//! * MGFR: GFR weight `+ (x_i − X̄)ᵀ C (y_i − Ȳ)` with `C` the transposed
//!   pseudo-inverse of `Σ̂_XY`
//! * DMGFR: as MGFR with `C` replaced by the truncated, shifted `Θ̂`
//!
//! The cross term uses each observation's own `(x_i, y_i)` and does not
//! depend on the query.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{
    center, column_means, compute_theta, empirical_moments, MomentEstimates, ThetaChoice,
    ThetaMatrix,
};
use crate::error::{Error, Result};
use crate::metric::{MetricSpace, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "GFR")]
    Gfr,
    #[serde(rename = "MGFR")]
    Mgfr,
    #[serde(rename = "DMGFR")]
    Dmgfr,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [
        EstimatorKind::Gfr,
        EstimatorKind::Mgfr,
        EstimatorKind::Dmgfr,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::Gfr => "GFR",
            EstimatorKind::Mgfr => "MGFR",
            EstimatorKind::Dmgfr => "DMGFR",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "GFR" => Ok(EstimatorKind::Gfr),
            "MGFR" => Ok(EstimatorKind::Mgfr),
            "DMGFR" => Ok(EstimatorKind::Dmgfr),
            other => Err(Error::InvalidConfiguration(format!(
                "unknown estimator {other:?}"
            ))),
        }
    }
}

/// A fitted object at one query.
#[derive(Debug, Clone, PartialEq)]
pub struct FrechetFit<P> {
    pub omega: P,
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `Σ_i w_i d²(Y_i, ω)` at the returned `ω`.
    pub objective: f64,
}

/// `(x_i − X̄)ᵀ C (y_i − Ȳ)` for every row.
pub fn cross_terms(dx: &DMatrix<f64>, dy: &DMatrix<f64>, c: &DMatrix<f64>) -> Vec<f64> {
    let projected = dx * c; // n×q
    projected
        .row_iter()
        .zip(dy.row_iter())
        .map(|(a, b)| a.dot(&b))
        .collect()
}

/// Training data and every matrix the three estimators need. Immutable once built.
#[derive(Debug, Clone)]
pub struct TrainedModel<S: MetricSpace> {
    space: S,
    kind: EstimatorKind,
    moments: MomentEstimates,
    theta: Option<ThetaMatrix>,
    responses: Vec<S::Point>,
    /// `(x_i − X̄)ᵀ Σ̂⁻¹`, one row per observation.
    leverage: DMatrix<f64>,
    dx: DMatrix<f64>,
    dy: DMatrix<f64>,
    /// Query-independent cross term per observation (zero for GFR).
    cross: Vec<f64>,
}

impl<S: MetricSpace> TrainedModel<S> {
    /// Fits moments (and `Θ̂` for DMGFR) from predictors `x` (n×m), the
    /// vector representation `y` (n×q) of the responses, and the responses
    /// themselves.
    pub fn train(
        space: S,
        kind: EstimatorKind,
        x: &DMatrix<f64>,
        y: &DMatrix<f64>,
        responses: Vec<S::Point>,
        theta: Option<ThetaChoice>,
    ) -> Result<Self> {
        if responses.len() != x.nrows() {
            return Err(Error::invalid(format!(
                "{} predictor rows but {} responses",
                x.nrows(),
                responses.len()
            )));
        }
        let moments = empirical_moments(x, y)?;
        Self::from_moments(space, kind, moments, x, y, responses, theta)
    }

    pub fn from_moments(
        space: S,
        kind: EstimatorKind,
        moments: MomentEstimates,
        x: &DMatrix<f64>,
        y: &DMatrix<f64>,
        responses: Vec<S::Point>,
        theta: Option<ThetaChoice>,
    ) -> Result<Self> {
        let dx = center(x, &moments.x_bar);
        let dy = center(y, &moments.y_bar);
        let theta = match kind {
            EstimatorKind::Dmgfr => {
                let choice = theta.ok_or_else(|| {
                    Error::InvalidConfiguration("DMGFR requires a theta configuration".into())
                })?;
                let cfg = choice.resolve(&moments.cross_inv)?;
                Some(compute_theta(&moments.cross_inv, cfg)?)
            }
            _ => None,
        };
        let cross = match kind {
            EstimatorKind::Gfr => vec![0.0; x.nrows()],
            EstimatorKind::Mgfr => cross_terms(&dx, &dy, &moments.cross_inv),
            EstimatorKind::Dmgfr => {
                cross_terms(&dx, &dy, &theta.as_ref().expect("set above").theta)
            }
        };
        // exact column sums are zero
        let mut leverage = &dx * &moments.sigma_inv;
        let residue = column_means(&leverage);
        for mut row in leverage.row_iter_mut() {
            row -= residue.transpose();
        }
        Ok(TrainedModel {
            space,
            kind,
            moments,
            theta,
            responses,
            leverage,
            dx,
            dy,
            cross,
        })
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn space(&self) -> &S {
        &self.space
    }

    pub fn moments(&self) -> &MomentEstimates {
        &self.moments
    }

    pub fn theta(&self) -> Option<&ThetaMatrix> {
        self.theta.as_ref()
    }

    pub fn responses(&self) -> &[S::Point] {
        &self.responses
    }

    pub fn n(&self) -> usize {
        self.responses.len()
    }

    fn query_offset(&self, x: &[f64]) -> Result<DVector<f64>> {
        let m = self.moments.x_bar.len();
        if x.len() != m {
            return Err(Error::invalid(format!(
                "query has {} coordinates, model expects {m}",
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("query has non-finite coordinates"));
        }
        Ok(DVector::from_row_slice(x) - &self.moments.x_bar)
    }

    /// `w_i = 1 + (x_i − X̄)ᵀ Σ̂⁻¹ (x − X̄)`.
    pub fn gfr_weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        let offset = self.query_offset(x)?;
        Ok((&self.leverage * offset).iter().map(|v| 1.0 + v).collect())
    }

    /// GFR weights plus the cross term; `C = Θ̂` for DMGFR models and the
    /// transposed pseudo-inverse of `Σ̂_XY` otherwise.
    pub fn mgfr_weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        let base = self.gfr_weights(x)?;
        let cross = match self.kind {
            EstimatorKind::Gfr => cross_terms(&self.dx, &self.dy, &self.moments.cross_inv),
            _ => self.cross.clone(),
        };
        Ok(base.iter().zip(&cross).map(|(a, b)| a + b).collect())
    }

    /// Weights for this model's estimator kind.
    pub fn weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        let base = self.gfr_weights(x)?;
        Ok(base.iter().zip(&self.cross).map(|(a, b)| a + b).collect())
    }

    /// The estimate at query `x`.
    pub fn fit_at(&self, x: &[f64], cfg: &SolverConfig) -> Result<FrechetFit<S::Point>> {
        cfg.validate()?;
        let weights = self.weights(x)?;
        let sol = self.space.frechet_mean(&self.responses, &weights, cfg)?;
        let objective = self
            .space
            .objective(&self.responses, &weights, &sol.point)?;
        Ok(FrechetFit {
            omega: sol.point,
            weights,
            iterations: sol.iterations,
            converged: sol.converged,
            objective,
        })
    }

    /// `fit_at` for each row of `queries`, in row order. Runs in parallel;
    /// output does not depend on scheduling. The lowest failing row index is
    /// reported.
    pub fn predict_batch(
        &self,
        queries: &DMatrix<f64>,
        cfg: &SolverConfig,
    ) -> Result<Vec<FrechetFit<S::Point>>> {
        let rows: Vec<Vec<f64>> = queries
            .row_iter()
            .map(|r| r.iter().cloned().collect())
            .collect();
        let results: Vec<Result<FrechetFit<S::Point>>> =
            rows.par_iter().map(|x| self.fit_at(x, cfg)).collect();
        results
            .into_iter()
            .enumerate()
            .map(|(row, r)| {
                r.map_err(|e| Error::Row {
                    row,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    pub fn in_sample_loss(&self, fits: &[FrechetFit<S::Point>], truth: &[S::Point]) -> Result<f64> {
        in_sample_loss(&self.space, fits, truth)
    }
}

/// Mean squared distance between fitted objects and the reference objects.
pub fn in_sample_loss<S: MetricSpace>(
    space: &S,
    fits: &[FrechetFit<S::Point>],
    truth: &[S::Point],
) -> Result<f64> {
    if fits.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} fits but {} reference objects",
            fits.len(),
            truth.len()
        )));
    }
    if fits.is_empty() {
        return Err(Error::invalid("no fits to score"));
    }
    let total = fits.iter().zip(truth).try_fold(0.0, |acc, (f, t)| {
        Ok::<_, Error>(acc + space.dist_sq(t, &f.omega)?)
    })?;
    Ok(total / fits.len() as f64)
}
