//! Fréchet regression for responses in metric spaces.
//!
//! The crate provides three estimators of a conditional Fréchet mean:
//! global Fréchet regression ([`EstimatorKind::Gfr`]), a multilabel
//! extension that adds a predictor–response cross-covariance term
//! ([`EstimatorKind::Mgfr`]), and a variant where that cross term is passed
//! through a truncated SVD with a Tikhonov shift before use
//! ([`EstimatorKind::Dmgfr`]).
//!
//! Responses can be one-dimensional distributions (quantile functions under
//! the 2-Wasserstein metric), Gaussian measures (Bures–Wasserstein), or
//! points on the unit sphere (geodesic metric). The [`simulation`] and
//! [`evaluation`] modules contain the data-generating processes and the
//! replicate-sweep harness used to study the estimators empirically.

pub mod covariance;
pub mod error;
pub mod evaluation;
mod linalg;
pub mod metric;
pub mod regression;
pub mod seeds;
pub mod simulation;

pub use covariance::{
    compute_theta, empirical_moments, empirical_moments_with_jitter, MomentEstimates, ThetaChoice,
    ThetaConfig, ThetaMatrix,
};
pub use error::{Error, Result};
pub use evaluation::{
    comparison_report, normality_diagnostic, normality_experiment, rate_estimate, run_sweep,
    NormalityConfig, Report, Scenario, SweepConfig, SweepResult,
};
pub use metric::{
    bures_wasserstein_sq, empirical_quantile, frechet_mean_quantile, frechet_mean_sphere,
    isotonic_project, sphere_geodesic_sq, wasserstein_sq_quantile, GaussianPoint, GaussianSpace,
    InitStrategy, MeanSolution, MetricSpace, MetricTag, ProbabilityGrid, QuantileFunction,
    QuantileSpace, SolverConfig, SpherePoint, SphereSpace,
};
pub use regression::{in_sample_loss, EstimatorKind, FrechetFit, TrainedModel};
pub use simulation::{simulate, SimConfig, SimDataset};

pub use nalgebra::{DMatrix, DVector};
