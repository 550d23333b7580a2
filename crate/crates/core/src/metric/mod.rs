//! Response metric spaces and their weighted Fréchet mean solvers.
//!
//! Three spaces ship: one-dimensional distributions represented by quantile
//! functions on a fixed probability grid (2-Wasserstein), Gaussian measures
//! under the Bures–Wasserstein distance, and the unit sphere under the
//! geodesic distance. Each implements [`MetricSpace`], which is all the
//! regression estimators need.

mod gaussian;
mod isotonic;
mod quantile;
mod sphere;

pub use gaussian::{bures_wasserstein_sq, GaussianPoint, GaussianSpace};
pub use isotonic::{isotonic_project, pava};
pub use quantile::{
    empirical_quantile, frechet_mean_quantile, wasserstein_sq_quantile, ProbabilityGrid,
    QuantileFunction, QuantileSpace,
};
pub use sphere::{frechet_mean_sphere, sphere_geodesic_sq, SpherePoint, SphereSpace};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How iterative mean solvers pick their starting point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// Weighted Euclidean average of the samples, mapped back into the space.
    #[default]
    WeightedAverage,
    FirstSample,
}

/// Stopping rule for iterative solvers: stop once `‖ω_k − ω_{k−1}‖ < eps_tol`
/// or after `k_max` iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub eps_tol: f64,
    pub k_max: usize,
    pub init: InitStrategy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps_tol: 1e-8,
            k_max: 500,
            init: InitStrategy::WeightedAverage,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps_tol > 0.0 && self.eps_tol.is_finite()) {
            return Err(Error::InvalidConfiguration(format!(
                "eps_tol must be positive, got {}",
                self.eps_tol
            )));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidConfiguration(
                "k_max must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Output of a weighted Fréchet mean solver.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanSolution<P> {
    pub point: P,
    pub iterations: usize,
    pub converged: bool,
}

/// A metric space together with a solver for `argmin_ω Σ w_i d²(y_i, ω)`.
pub trait MetricSpace: Send + Sync {
    type Point: Clone + Send + Sync + std::fmt::Debug + PartialEq;

    fn dist_sq(&self, a: &Self::Point, b: &Self::Point) -> Result<f64>;

    fn frechet_mean(
        &self,
        samples: &[Self::Point],
        weights: &[f64],
        cfg: &SolverConfig,
    ) -> Result<MeanSolution<Self::Point>>;

    /// Weighted Fréchet objective `Σ w_i d²(y_i, ω)`.
    fn objective(
        &self,
        samples: &[Self::Point],
        weights: &[f64],
        omega: &Self::Point,
    ) -> Result<f64> {
        check_weights(samples.len(), weights)?;
        samples
            .iter()
            .zip(weights)
            .try_fold(0.0, |acc, (y, &w)| Ok(acc + w * self.dist_sq(y, omega)?))
    }
}

/// Which response space an experiment runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricTag {
    #[default]
    QuantileWasserstein,
    Bures,
    Sphere,
}

impl MetricTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            MetricTag::QuantileWasserstein => "quantile-wasserstein",
            MetricTag::Bures => "bures",
            MetricTag::Sphere => "sphere",
        }
    }
}

/// Validates lengths and finiteness and returns the weight sum.
pub(crate) fn check_weights(n: usize, weights: &[f64]) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("no samples"));
    }
    if weights.len() != n {
        return Err(Error::invalid(format!(
            "{} samples but {} weights",
            n,
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid("non-finite weight"));
    }
    Ok(weights.iter().sum())
}

pub(crate) fn positive_weight_sum(n: usize, weights: &[f64]) -> Result<f64> {
    let sum = check_weights(n, weights)?;
    if sum > 0.0 {
        Ok(sum)
    } else {
        Err(Error::DegenerateWeights { sum })
    }
}
