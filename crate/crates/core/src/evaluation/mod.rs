//! Replicate sweeps over sample sizes and estimators, and the statistics
//! computed from them: convergence-rate fits, normality diagnostics and
//! estimator comparisons.
//!
//! Every replicate draws from substreams derived from the master seed, the
//! sample size and the replicate index, so a sweep gives identical output
//! whether replicates run sequentially or in parallel.

mod io;
mod report;
pub mod stats;

pub use io::{read_sweep_csv, summary_json, write_sweep_csv, RateEntry, Summary, SCHEMA_VERSION};
pub use report::{comparison_report, Report, ReportRow};
pub use stats::{log_log_slope, RateFit};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{empirical_moments, ThetaChoice};
use crate::error::{Error, Result};
use crate::metric::{
    GaussianPoint, GaussianSpace, MetricSpace, MetricTag, QuantileFunction, QuantileSpace,
    SolverConfig, SphereSpace,
};
use crate::regression::{EstimatorKind, TrainedModel};
use crate::seeds::{self, derive_seed};
use crate::simulation::{
    self, expected_error_quantile, gen_predictors, inject_collinearity, inject_noise, level_range,
    rows_to_gaussians, rows_to_quantiles, rows_to_sphere, simulate_from_predictors, SimConfig,
    SimDesign, SphereTruthTable,
};

/// Noise and multicollinearity injected into each replicate.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Standard deviation of noise added to the response matrix.
    pub noise_y: f64,
    /// Standard deviation of noise added to the observed predictors.
    pub noise_x: f64,
    /// `(src, dst)` column pairs; `dst` becomes `src` plus jitter.
    pub collinear: Vec<(usize, usize)>,
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub estimators: Vec<EstimatorKind>,
    pub scenario: Scenario,
    pub master_seed: u64,
    pub metric: MetricTag,
    /// Base generating process; `n`, `seed` and `design_seed` are set per replicate.
    pub sim: SimConfig,
    pub solver: SolverConfig,
    pub theta: ThetaChoice,
    /// Score at fresh queries from the same design instead of the training rows.
    pub held_out: bool,
    /// Monte-Carlo draws for the reference objects.
    pub truth_draws: usize,
    pub parallel: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n_grid: vec![50, 100, 200, 400, 800],
            replicates: 50,
            estimators: EstimatorKind::ALL.to_vec(),
            scenario: Scenario::default(),
            master_seed: 20240501,
            metric: MetricTag::QuantileWasserstein,
            sim: SimConfig::default(),
            solver: SolverConfig::default(),
            theta: ThetaChoice::Adaptive,
            held_out: false,
            truth_draws: 20_000,
            parallel: true,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, m: String| Err(Error::InvalidConfiguration(format!("{k}: {m}")));
        if self.n_grid.is_empty() {
            return bad("n_grid", "must not be empty".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return bad(
                "n_grid",
                format!("must be strictly increasing, got {:?}", self.n_grid),
            );
        }
        if self.n_grid[0] < 2 {
            return bad("n_grid", "sample sizes must be at least 2".into());
        }
        if self.replicates == 0 {
            return bad("replicates", "must be at least 1".into());
        }
        if self.estimators.is_empty() {
            return bad("estimators", "must name at least one estimator".into());
        }
        let s = &self.scenario;
        if !(s.noise_y >= 0.0 && s.noise_y.is_finite()) {
            return bad("noise_y", format!("must be nonnegative, got {}", s.noise_y));
        }
        if !(s.noise_x >= 0.0 && s.noise_x.is_finite()) {
            return bad("noise_x", format!("must be nonnegative, got {}", s.noise_x));
        }
        if !(s.jitter >= 0.0 && s.jitter.is_finite()) {
            return bad("jitter", format!("must be nonnegative, got {}", s.jitter));
        }
        for &(a, b) in &s.collinear {
            if a == b || a >= self.sim.m || b >= self.sim.m {
                return bad("collinear", format!("invalid column pair ({a}, {b})"));
            }
        }
        if self.truth_draws == 0 {
            return bad("truth_draws", "must be at least 1".into());
        }
        self.sim.validate()?;
        self.solver.validate()?;
        if let ThetaChoice::Fixed(t) = &self.theta {
            t.validate()?;
        }
        Ok(())
    }

    fn design_seed(&self) -> u64 {
        derive_seed(self.master_seed, &[seeds::STREAM_DESIGN])
    }
}

/// One (estimator, n, replicate) cell; `loss` is `None` when the replicate
/// was skipped as ill-conditioned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub estimator: EstimatorKind,
    pub n: usize,
    pub replicate: usize,
    pub loss: Option<f64>,
}

impl LossRecord {
    pub fn skipped(&self) -> bool {
        self.loss.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub estimator: EstimatorKind,
    pub n: usize,
    pub completed: usize,
    pub skipped: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub iqr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub metric: MetricTag,
    pub estimators: Vec<EstimatorKind>,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    /// Ordered by n, then replicate, then estimator (as listed).
    pub records: Vec<LossRecord>,
}

impl SweepResult {
    /// Completed losses for one cell, in replicate order.
    pub fn losses(&self, estimator: EstimatorKind, n: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.estimator == estimator && r.n == n)
            .filter_map(|r| r.loss)
            .collect()
    }

    pub fn skipped(&self, estimator: EstimatorKind, n: usize) -> usize {
        self.records
            .iter()
            .filter(|r| r.estimator == estimator && r.n == n && r.skipped())
            .count()
    }

    pub fn total_skipped(&self) -> usize {
        self.records.iter().filter(|r| r.skipped()).count()
    }

    pub fn median_loss(&self, estimator: EstimatorKind, n: usize) -> Option<f64> {
        let l = self.losses(estimator, n);
        (!l.is_empty()).then(|| stats::median(&l))
    }

    pub fn mean_loss(&self, estimator: EstimatorKind, n: usize) -> Option<f64> {
        let l = self.losses(estimator, n);
        (!l.is_empty()).then(|| stats::mean(&l))
    }

    /// Per-(estimator, n) aggregates, estimator-major in listed order.
    pub fn aggregates(&self) -> Vec<CellSummary> {
        let mut out = Vec::new();
        for &est in &self.estimators {
            for &n in &self.n_grid {
                let mut l = self.losses(est, n);
                l.sort_by(f64::total_cmp);
                let some = |v: f64| (!l.is_empty()).then_some(v);
                let q1 = stats::sorted_quantile(&l, 0.25);
                let q3 = stats::sorted_quantile(&l, 0.75);
                out.push(CellSummary {
                    estimator: est,
                    n,
                    completed: l.len(),
                    skipped: self.skipped(est, n),
                    mean: some(stats::mean(&l)),
                    median: some(stats::sorted_quantile(&l, 0.5)),
                    q1: some(q1),
                    q3: some(q3),
                    iqr: some(q3 - q1),
                });
            }
        }
        out
    }
}

/// Fits `log(median loss)` against `log(n)` for one estimator. Needs at
/// least 3 sample sizes with at least 10 completed replicates each.
pub fn rate_estimate(result: &SweepResult, estimator: EstimatorKind) -> Result<RateFit> {
    if !result.estimators.contains(&estimator) {
        return Err(Error::invalid(format!(
            "{estimator} is not part of this sweep"
        )));
    }
    if result.n_grid.len() < 3 {
        return Err(Error::invalid(format!(
            "rate fitting needs at least 3 sample sizes, sweep has {}",
            result.n_grid.len()
        )));
    }
    let mut ns = Vec::new();
    let mut medians = Vec::new();
    for &n in &result.n_grid {
        let l = result.losses(estimator, n);
        if l.len() < 10 {
            return Err(Error::invalid(format!(
                "rate fitting needs at least 10 replicates per sample size; n={n} has {}",
                l.len()
            )));
        }
        let med = stats::median(&l);
        if med <= 0.0 {
            return Err(Error::DegenerateRate(format!(
                "median loss at n={n} is zero"
            )));
        }
        ns.push(n as f64);
        medians.push(med);
    }
    log_log_slope(&ns, &medians)
}

/// Skewness/excess-kurtosis check of a scalar functional across replicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normality {
    pub replicates: usize,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub pass: bool,
}

pub const MIN_NORMALITY_REPLICATES: usize = 200;
pub const SKEWNESS_BOUND: f64 = 0.3;
pub const KURTOSIS_BOUND: f64 = 0.5;

/// Uses the first coordinate of each replicate's estimate; passes when
/// `|skewness| < 0.3` and `|excess kurtosis| < 0.5`.
pub fn normality_diagnostic(replicate_estimates: &[Vec<f64>]) -> Result<Normality> {
    if replicate_estimates.len() < MIN_NORMALITY_REPLICATES {
        return Err(Error::invalid(format!(
            "normality diagnostic needs at least {MIN_NORMALITY_REPLICATES} replicates, got {}",
            replicate_estimates.len()
        )));
    }
    let values: Vec<f64> = replicate_estimates
        .iter()
        .map(|v| {
            v.first()
                .copied()
                .ok_or_else(|| Error::invalid("empty replicate estimate"))
        })
        .collect::<Result<_>>()?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite replicate estimate"));
    }
    let (skewness, excess_kurtosis) = stats::skewness_kurtosis(&values);
    Ok(Normality {
        replicates: values.len(),
        skewness,
        excess_kurtosis,
        pass: skewness.abs() < SKEWNESS_BOUND && excess_kurtosis.abs() < KURTOSIS_BOUND,
    })
}

/// Per-sweep reference quantities that depend only on the design.
enum TruthCache {
    Quantile { base: Vec<f64>, grid_size: usize },
    Gaussian { sd: f64 },
    Sphere(SphereTruthTable),
}

impl TruthCache {
    fn new(cfg: &SweepConfig, design: &SimDesign) -> Result<Self> {
        let seed = derive_seed(cfg.master_seed, &[seeds::STREAM_TRUTH]);
        let draws = cfg.truth_draws;
        Ok(match cfg.metric {
            MetricTag::QuantileWasserstein => {
                let grid = cfg.sim.grid()?;
                TruthCache::Quantile {
                    base: expected_error_quantile(design, grid, draws, seed)?,
                    grid_size: grid.len(),
                }
            }
            MetricTag::Bures => {
                let probe = simulation::SimTruth {
                    design: design.clone(),
                    levels: vec![0.0],
                };
                let sd =
                    simulation::truth_gaussians(&probe, draws, seed)?[0].sigma()[(0, 0)].sqrt();
                TruthCache::Gaussian { sd }
            }
            MetricTag::Sphere => {
                let range = level_range(&cfg.sim, design);
                // the spherical mean solve is costlier per draw
                let draws = draws.min(4000);
                TruthCache::Sphere(SphereTruthTable::new(
                    design, cfg.sim.v1, range, draws, 33, seed,
                )?)
            }
        })
    }
}

struct Replicate {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    queries: DMatrix<f64>,
    query_levels: Vec<f64>,
}

fn draw_replicate(cfg: &SweepConfig, n: usize, r: usize) -> Result<Replicate> {
    let sample_seed = derive_seed(
        cfg.master_seed,
        &[seeds::STREAM_REPLICATE, n as u64, r as u64],
    );
    let sim = SimConfig {
        n,
        seed: sample_seed,
        design_seed: cfg.design_seed(),
        ..cfg.sim.clone()
    };
    let sc = &cfg.scenario;
    let with_collinearity = |x: DMatrix<f64>, seed: u64| -> Result<DMatrix<f64>> {
        if sc.collinear.is_empty() {
            Ok(x)
        } else {
            inject_collinearity(&x, &sc.collinear, sc.jitter, seed)
        }
    };
    let x = with_collinearity(gen_predictors(&sim)?, sample_seed)?;
    let data = simulate_from_predictors(&sim, x)?;
    let y = inject_noise(
        &data.y,
        sc.noise_y,
        derive_seed(sample_seed, &[seeds::STREAM_NOISE, 1]),
    )?;
    let x_obs = inject_noise(
        &data.x,
        sc.noise_x,
        derive_seed(sample_seed, &[seeds::STREAM_NOISE, 2]),
    )?;

    let (queries, query_levels) = if cfg.held_out {
        let fresh_seed = derive_seed(sample_seed, &[seeds::STREAM_HELD_OUT]);
        let fresh = SimConfig {
            seed: fresh_seed,
            ..sim.clone()
        };
        let xq = with_collinearity(gen_predictors(&fresh)?, fresh_seed)?;
        let levels = simulation::conditional_levels(&sim, &xq);
        (xq, levels)
    } else {
        (x_obs.clone(), data.truth.levels.clone())
    };
    Ok(Replicate {
        x: x_obs,
        y,
        queries,
        query_levels,
    })
}

fn score<S: MetricSpace + Clone>(
    cfg: &SweepConfig,
    rep: &Replicate,
    space: S,
    responses: Vec<S::Point>,
    truth: Vec<S::Point>,
) -> Result<Vec<Option<f64>>> {
    let moments = match empirical_moments(&rep.x, &rep.y) {
        Ok(m) => m,
        Err(Error::IllConditioned { .. }) => return Ok(vec![None; cfg.estimators.len()]),
        Err(e) => return Err(e),
    };
    cfg.estimators
        .iter()
        .map(|&kind| {
            let model = TrainedModel::from_moments(
                space.clone(),
                kind,
                moments.clone(),
                &rep.x,
                &rep.y,
                responses.clone(),
                Some(cfg.theta),
            )?;
            let fits = model.predict_batch(&rep.queries, &cfg.solver)?;
            Ok(Some(model.in_sample_loss(&fits, &truth)?))
        })
        .collect()
}

fn run_replicate(
    cfg: &SweepConfig,
    truth: &TruthCache,
    n: usize,
    r: usize,
) -> Result<Vec<Option<f64>>> {
    let rep = draw_replicate(cfg, n, r)?;
    match truth {
        TruthCache::Quantile { base, grid_size } => {
            let grid = cfg.sim.grid()?;
            let responses = rows_to_quantiles(&rep.y, *grid_size)?;
            let truth: Vec<QuantileFunction> = rep
                .query_levels
                .iter()
                .map(|&l| QuantileFunction::new(grid, base.iter().map(|b| b + l).collect()))
                .collect::<Result<_>>()?;
            score(cfg, &rep, QuantileSpace::new(grid), responses, truth)
        }
        TruthCache::Gaussian { sd } => {
            let responses = rows_to_gaussians(&rep.y)?;
            let truth: Vec<GaussianPoint> = rep
                .query_levels
                .iter()
                .map(|&l| GaussianPoint::univariate(l, *sd))
                .collect::<Result<_>>()?;
            score(cfg, &rep, GaussianSpace::new(1), responses, truth)
        }
        TruthCache::Sphere(table) => {
            let responses = rows_to_sphere(&rep.y)?;
            let truth = rep
                .query_levels
                .iter()
                .map(|&l| table.at(l))
                .collect::<Result<_>>()?;
            score(cfg, &rep, SphereSpace::new(cfg.sim.q), responses, truth)
        }
    }
}

/// Runs every (n, replicate) cell: simulate, train each estimator, and score
/// its fits against the noiseless conditional Fréchet means. Ill-conditioned
/// replicates are recorded as skipped.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let design = simulation::design(&SimConfig {
        design_seed: cfg.design_seed(),
        ..cfg.sim.clone()
    })?;
    let truth = TruthCache::new(cfg, &design)?;

    let cells: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replicates).map(move |r| (n, r)))
        .collect();
    let run = |&(n, r): &(usize, usize)| run_replicate(cfg, &truth, n, r);
    let outcomes: Vec<Result<Vec<Option<f64>>>> = if cfg.parallel {
        cells.par_iter().map(run).collect()
    } else {
        cells.iter().map(run).collect()
    };

    let mut records = Vec::with_capacity(cells.len() * cfg.estimators.len());
    for (&(n, r), outcome) in cells.iter().zip(outcomes) {
        for (&estimator, loss) in cfg.estimators.iter().zip(outcome?) {
            records.push(LossRecord {
                estimator,
                n,
                replicate: r,
                loss,
            });
        }
    }
    Ok(SweepResult {
        metric: cfg.metric,
        estimators: cfg.estimators.clone(),
        n_grid: cfg.n_grid.clone(),
        replicates: cfg.replicates,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityConfig {
    pub n: usize,
    pub replicates: usize,
    pub estimator: EstimatorKind,
    pub master_seed: u64,
    pub sim: SimConfig,
    pub solver: SolverConfig,
    pub theta: ThetaChoice,
    /// Query point; defaults to the predictor mean `μ_X`.
    pub query: Option<Vec<f64>>,
    pub parallel: bool,
}

impl Default for NormalityConfig {
    fn default() -> Self {
        NormalityConfig {
            n: 400,
            replicates: 500,
            estimator: EstimatorKind::Mgfr,
            master_seed: 20240502,
            sim: SimConfig::default(),
            solver: SolverConfig::default(),
            theta: ThetaChoice::Adaptive,
            query: None,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalityReport {
    /// Fitted quantile vector at the query, one per completed replicate.
    pub estimates: Vec<Vec<f64>>,
    pub skipped: usize,
    pub diagnostic: Normality,
}

/// Repeats the quantile-space fit at a fixed query over independent
/// replicates and runs [`normality_diagnostic`] on the results.
pub fn normality_experiment(cfg: &NormalityConfig) -> Result<NormalityReport> {
    let sweep = SweepConfig {
        n_grid: vec![cfg.n],
        replicates: cfg.replicates,
        estimators: vec![cfg.estimator],
        master_seed: cfg.master_seed,
        sim: cfg.sim.clone(),
        solver: cfg.solver,
        theta: cfg.theta,
        ..SweepConfig::default()
    };
    sweep.validate()?;
    let query = cfg.query.clone().unwrap_or_else(|| cfg.sim.mean_vector());
    if query.len() != cfg.sim.m {
        return Err(Error::InvalidConfiguration(format!(
            "query: has {} coordinates but m = {}",
            query.len(),
            cfg.sim.m
        )));
    }
    let grid = cfg.sim.grid()?;
    let one = |r: usize| -> Result<Option<Vec<f64>>> {
        let rep = draw_replicate(&sweep, cfg.n, r)?;
        let responses = rows_to_quantiles(&rep.y, grid.len())?;
        let model = match TrainedModel::train(
            QuantileSpace::new(grid),
            cfg.estimator,
            &rep.x,
            &rep.y,
            responses,
            Some(cfg.theta),
        ) {
            Ok(m) => m,
            Err(Error::IllConditioned { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        Ok(Some(
            model.fit_at(&query, &cfg.solver)?.omega.values().to_vec(),
        ))
    };
    let outcomes: Vec<Result<Option<Vec<f64>>>> = if cfg.parallel {
        (0..cfg.replicates).into_par_iter().map(one).collect()
    } else {
        (0..cfg.replicates).map(one).collect()
    };
    let mut estimates = Vec::new();
    let mut skipped = 0;
    for o in outcomes {
        match o? {
            Some(v) => estimates.push(v),
            None => skipped += 1,
        }
    }
    let diagnostic = normality_diagnostic(&estimates)?;
    Ok(NormalityReport {
        estimates,
        skipped,
        diagnostic,
    })
}
