//! Synthetic data for the distributional-response experiments.
//!
//! Predictors are `N(μ_X, A Aᵀ)` with a seeded standard-normal `A`
//! (optionally normalized row-wise onto the unit sphere). Each observation
//! gets a latent level `β_i ~ N(β₀ + δ · mean(x_i), v₁)` and a response row
//! `y_i ~ N(β_i 1_q, Σ_Y)` with `Σ_Y = B Bᵀ + 0.1 I`. The response object is
//! the empirical distribution of the row's `q` coordinates.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{
    empirical_quantile, frechet_mean_sphere, pava, GaussianPoint, ProbabilityGrid,
    QuantileFunction, SolverConfig, SpherePoint,
};
use crate::seeds::{self, stream};

/// Printed predictor mean; cycled when `m ≠ 5`.
pub const DEFAULT_MU_PATTERN: [f64; 5] = [0.0, 1.0, -1.0, 2.0, 0.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub m: usize,
    pub q: usize,
    /// Predictor mean; `None` cycles [`DEFAULT_MU_PATTERN`].
    pub mu_x: Option<Vec<f64>>,
    pub beta0: f64,
    pub delta: f64,
    /// Variance of the latent level around `β₀ + δ · mean(x_i)`.
    pub v1: f64,
    /// Seed for the sampled observations.
    pub seed: u64,
    /// Seed for the fixed design matrices `A` and `B`.
    pub design_seed: u64,
    pub grid_size: usize,
    pub spherical: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 200,
            m: 5,
            q: 10,
            mu_x: None,
            beta0: 1.0,
            delta: 0.5,
            v1: 0.1,
            seed: 0,
            design_seed: 0,
            grid_size: ProbabilityGrid::DEFAULT_SIZE,
            spherical: false,
        }
    }
}

fn config_error(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidConfiguration(format!("{key}: {msg}"))
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(config_error(
                "n",
                format!("must be at least 2, got {}", self.n),
            ));
        }
        if self.m < 1 {
            return Err(config_error("m", "must be at least 1"));
        }
        if self.q < 2 {
            return Err(config_error(
                "q",
                format!("must be at least 2, got {}", self.q),
            ));
        }
        if !(self.v1 > 0.0 && self.v1.is_finite()) {
            return Err(config_error(
                "v1",
                format!("must be positive, got {}", self.v1),
            ));
        }
        if !self.beta0.is_finite() {
            return Err(config_error("beta0", "must be finite"));
        }
        if !self.delta.is_finite() {
            return Err(config_error("delta", "must be finite"));
        }
        if self.grid_size < 2 {
            return Err(config_error("grid_size", "must be at least 2"));
        }
        if let Some(mu) = &self.mu_x {
            if mu.len() != self.m {
                return Err(config_error(
                    "mu_x",
                    format!("has {} entries but m = {}", mu.len(), self.m),
                ));
            }
            if mu.iter().any(|v| !v.is_finite()) {
                return Err(config_error("mu_x", "must be finite"));
            }
        }
        Ok(())
    }

    pub fn mean_vector(&self) -> Vec<f64> {
        match &self.mu_x {
            Some(mu) => mu.clone(),
            None => (0..self.m).map(|j| DEFAULT_MU_PATTERN[j % 5]).collect(),
        }
    }

    pub fn grid(&self) -> Result<ProbabilityGrid> {
        ProbabilityGrid::new(self.grid_size)
    }
}

/// The fixed (non-sampled) part of the generating process.
#[derive(Debug, Clone, PartialEq)]
pub struct SimDesign {
    pub mu_x: DVector<f64>,
    pub a: DMatrix<f64>,
    pub sigma_x: DMatrix<f64>,
    pub sigma_y: DMatrix<f64>,
    pub sigma_y_chol: DMatrix<f64>,
}

fn standard_normal_matrix<R: Rng>(rng: &mut R, r: usize, c: usize) -> DMatrix<f64> {
    // row-major fill so the draw order is obvious
    let mut out = DMatrix::zeros(r, c);
    for i in 0..r {
        for j in 0..c {
            out[(i, j)] = rng.sample(StandardNormal);
        }
    }
    out
}

pub fn design(cfg: &SimConfig) -> Result<SimDesign> {
    cfg.validate()?;
    let mut rng = stream(
        cfg.design_seed,
        &[seeds::STREAM_DESIGN, cfg.m as u64, cfg.q as u64],
    );
    let a = standard_normal_matrix(&mut rng, cfg.m, cfg.m);
    let b = standard_normal_matrix(&mut rng, cfg.q, cfg.q);
    let sigma_x = &a * a.transpose();
    let mut sigma_y = &b * b.transpose() + DMatrix::identity(cfg.q, cfg.q) * 0.1;
    sigma_y = (&sigma_y + sigma_y.transpose()) * 0.5;
    let sigma_y_chol = sigma_y
        .clone()
        .cholesky()
        .ok_or_else(|| Error::invalid("Σ_Y is not positive definite"))?
        .l();
    Ok(SimDesign {
        mu_x: DVector::from_vec(cfg.mean_vector()),
        a,
        sigma_x,
        sigma_y,
        sigma_y_chol,
    })
}

/// `n × m` predictor matrix with rows `μ_X + A z`, `z ~ N(0, I)`; rows are
/// scaled to unit length when `cfg.spherical`.
pub fn gen_predictors(cfg: &SimConfig) -> Result<DMatrix<f64>> {
    let d = design(cfg)?;
    let mut rng = stream(cfg.seed, &[seeds::STREAM_PREDICTORS]);
    let mut x = DMatrix::zeros(cfg.n, cfg.m);
    for i in 0..cfg.n {
        let z = DVector::from_iterator(cfg.m, (0..cfg.m).map(|_| rng.sample(StandardNormal)));
        let row = &d.mu_x + &d.a * z;
        if cfg.spherical {
            let norm = row.norm();
            for j in 0..cfg.m {
                x[(i, j)] = row[j] / norm;
            }
        } else {
            for j in 0..cfg.m {
                x[(i, j)] = row[j];
            }
        }
    }
    Ok(x)
}

/// `β₀ + δ · mean(x_i)` for every row: the noiseless conditional level.
pub fn conditional_levels(cfg: &SimConfig, x: &DMatrix<f64>) -> Vec<f64> {
    x.row_iter()
        .map(|r| cfg.beta0 + cfg.delta * r.mean())
        .collect()
}

/// Response rows `y_i ~ N(β_i 1_q, Σ_Y)` and the sampled levels `β_i`.
pub fn gen_responses(cfg: &SimConfig, x: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let d = design(cfg)?;
    if x.nrows() != cfg.n || x.ncols() != cfg.m {
        return Err(Error::invalid(format!(
            "predictors are {}x{}, config expects {}x{}",
            x.nrows(),
            x.ncols(),
            cfg.n,
            cfg.m
        )));
    }
    let mut rng = stream(cfg.seed, &[seeds::STREAM_RESPONSES]);
    let sd = cfg.v1.sqrt();
    let levels = conditional_levels(cfg, x);
    let mut y = DMatrix::zeros(cfg.n, cfg.q);
    let mut beta = Vec::with_capacity(cfg.n);
    for (i, level) in levels.into_iter().enumerate() {
        let z: f64 = rng.sample(StandardNormal);
        let b = level + sd * z;
        let e = &d.sigma_y_chol
            * DVector::from_iterator(cfg.q, (0..cfg.q).map(|_| rng.sample(StandardNormal)));
        for j in 0..cfg.q {
            y[(i, j)] = b + e[j];
        }
        beta.push(b);
    }
    Ok((y, beta))
}

/// Adds i.i.d. `N(0, σ²)` to every entry; `σ = 0` returns an exact copy.
pub fn inject_noise(data: &DMatrix<f64>, sigma_noise: f64, seed: u64) -> Result<DMatrix<f64>> {
    if !(sigma_noise >= 0.0 && sigma_noise.is_finite()) {
        return Err(Error::invalid(format!(
            "noise level must be nonnegative, got {sigma_noise}"
        )));
    }
    if sigma_noise == 0.0 {
        return Ok(data.clone());
    }
    let mut rng = stream(seed, &[seeds::STREAM_NOISE]);
    let mut out = data.clone();
    for i in 0..out.nrows() {
        for j in 0..out.ncols() {
            let z: f64 = rng.sample(StandardNormal);
            out[(i, j)] += sigma_noise * z;
        }
    }
    Ok(out)
}

/// Overwrites column `dst` with column `src` plus `N(0, jitter²)` for each pair.
pub fn inject_collinearity(
    x: &DMatrix<f64>,
    pairs: &[(usize, usize)],
    jitter: f64,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if !(jitter >= 0.0 && jitter.is_finite()) {
        return Err(Error::invalid(format!(
            "jitter must be nonnegative, got {jitter}"
        )));
    }
    let mut out = x.clone();
    let mut rng = stream(seed, &[seeds::STREAM_COLLINEAR]);
    for &(src, dst) in pairs {
        if src >= x.ncols() || dst >= x.ncols() {
            return Err(Error::invalid(format!(
                "column pair ({src}, {dst}) out of range for {} columns",
                x.ncols()
            )));
        }
        if src == dst {
            return Err(Error::invalid(format!(
                "collinear pair uses column {src} twice"
            )));
        }
        for i in 0..out.nrows() {
            let z: f64 = rng.sample(StandardNormal);
            out[(i, dst)] = out[(i, src)] + jitter * z;
        }
    }
    Ok(out)
}

/// Empirical quantile function of each row's coordinates.
pub fn rows_to_quantiles(y: &DMatrix<f64>, grid_size: usize) -> Result<Vec<QuantileFunction>> {
    if y.ncols() < 2 {
        return Err(Error::invalid("response rows need at least 2 coordinates"));
    }
    let grid = ProbabilityGrid::new(grid_size)?;
    y.row_iter()
        .map(|r| empirical_quantile(&r.iter().cloned().collect::<Vec<_>>(), grid))
        .collect()
}

/// Univariate Gaussian `N(mean, var)` of each row's coordinates (divisor q).
pub fn rows_to_gaussians(y: &DMatrix<f64>) -> Result<Vec<GaussianPoint>> {
    y.row_iter()
        .map(|r| {
            let (mean, sd) = mean_sd(r.iter().cloned());
            GaussianPoint::univariate(mean, sd)
        })
        .collect()
}

/// Each row scaled to unit length.
pub fn rows_to_sphere(y: &DMatrix<f64>) -> Result<Vec<SpherePoint>> {
    y.row_iter()
        .map(|r| SpherePoint::normalize(r.transpose()))
        .collect()
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Noiseless generating quantities kept alongside a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTruth {
    pub design: SimDesign,
    /// `β₀ + δ · mean(x_i)` per row.
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimDataset {
    pub config: SimConfig,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub beta: Vec<f64>,
    pub responses: Vec<QuantileFunction>,
    pub truth: SimTruth,
}

/// Full pipeline: predictors, responses, quantile objects.
pub fn simulate(cfg: &SimConfig) -> Result<SimDataset> {
    let x = gen_predictors(cfg)?;
    simulate_from_predictors(cfg, x)
}

/// Responses for a caller-supplied predictor matrix (e.g. after collinearity
/// injection).
pub fn simulate_from_predictors(cfg: &SimConfig, x: DMatrix<f64>) -> Result<SimDataset> {
    let d = design(cfg)?;
    let (y, beta) = gen_responses(cfg, &x)?;
    let responses = rows_to_quantiles(&y, cfg.grid_size)?;
    let levels = conditional_levels(cfg, &x);
    Ok(SimDataset {
        config: cfg.clone(),
        x,
        y,
        beta,
        responses,
        truth: SimTruth { design: d, levels },
    })
}

/// Draws from `N(0, Σ_Y)` shared by the truth computations.
fn error_rows(design: &SimDesign, draws: usize, seed: u64) -> DMatrix<f64> {
    let q = design.sigma_y.nrows();
    let mut rng = stream(seed, &[seeds::STREAM_TRUTH, draws as u64]);
    let z = standard_normal_matrix(&mut rng, draws, q);
    z * design.sigma_y_chol.transpose()
}

/// Monte-Carlo estimate of `E[Q(e)]` for a response-error row `e ~ N(0, Σ_Y)`.
pub fn expected_error_quantile(
    design: &SimDesign,
    grid: ProbabilityGrid,
    draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let e = error_rows(design, draws, seed);
    let mut acc = vec![0.0; grid.len()];
    let mut buf = Vec::with_capacity(e.ncols());
    for row in e.row_iter() {
        buf.clear();
        buf.extend(row.iter().cloned());
        let q = empirical_quantile(&buf, grid)?;
        for (a, v) in acc.iter_mut().zip(q.values()) {
            *a += v;
        }
    }
    for a in &mut acc {
        *a /= draws as f64;
    }
    Ok(pava(&acc))
}

/// Conditional Fréchet mean of the quantile response given each row's
/// predictors: `(β₀ + δ · mean(x_i)) + E[Q(e)]`.
///
/// Exact up to the Monte-Carlo error in `E[Q(e)]`, because the empirical
/// quantile commutes with a common shift of the row.
pub fn truth_quantiles(
    truth: &SimTruth,
    grid: ProbabilityGrid,
    draws: usize,
    seed: u64,
) -> Result<Vec<QuantileFunction>> {
    let base = expected_error_quantile(&truth.design, grid, draws, seed)?;
    truth
        .levels
        .iter()
        .map(|&lvl| QuantileFunction::new(grid, base.iter().map(|b| b + lvl).collect()))
        .collect()
}

/// Conditional Fréchet mean of the univariate-Gaussian response: mean
/// `β₀ + δ · mean(x_i)` and standard deviation `E[sd(e)]`.
pub fn truth_gaussians(truth: &SimTruth, draws: usize, seed: u64) -> Result<Vec<GaussianPoint>> {
    let e = error_rows(&truth.design, draws, seed);
    let sd = e
        .row_iter()
        .map(|r| mean_sd(r.iter().cloned()).1)
        .sum::<f64>()
        / draws as f64;
    truth
        .levels
        .iter()
        .map(|&lvl| GaussianPoint::univariate(lvl, sd))
        .collect()
}

/// Conditional Fréchet mean on the sphere of `normalize(β 1_q + e)` with
/// `β ~ N(level, v₁)`, tabulated on evenly spaced levels and interpolated
/// (then renormalized) in between. Levels outside the table are clamped.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereTruthTable {
    lo: f64,
    hi: f64,
    knots: Vec<DVector<f64>>,
}

impl SphereTruthTable {
    pub fn new(
        design: &SimDesign,
        v1: f64,
        (lo, hi): (f64, f64),
        draws: usize,
        knots: usize,
        seed: u64,
    ) -> Result<Self> {
        let knots = knots.max(2);
        let hi = if hi > lo { hi } else { lo + 1e-9 };
        let e = error_rows(design, draws, seed);
        let mut rng = stream(seed, &[seeds::STREAM_TRUTH, 1]);
        let jitter: Vec<f64> = (0..draws)
            .map(|_| v1.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let cfg = SolverConfig {
            eps_tol: 1e-12,
            k_max: 2000,
            ..SolverConfig::default()
        };
        let weights = vec![1.0; draws];
        let table = (0..knots)
            .map(|k| {
                let level = lo + (hi - lo) * k as f64 / (knots - 1) as f64;
                let pts: Vec<SpherePoint> = e
                    .row_iter()
                    .zip(&jitter)
                    .map(|(r, z)| SpherePoint::normalize(r.transpose().add_scalar(level + z)))
                    .collect::<Result<_>>()?;
                Ok(frechet_mean_sphere(&pts, &weights, &cfg)?
                    .0
                    .coords()
                    .clone())
            })
            .collect::<Result<_>>()?;
        Ok(SphereTruthTable {
            lo,
            hi,
            knots: table,
        })
    }

    pub fn at(&self, level: f64) -> Result<SpherePoint> {
        let k = self.knots.len();
        let pos = ((level - self.lo) / (self.hi - self.lo)).clamp(0.0, 1.0) * (k - 1) as f64;
        let i = (pos.floor() as usize).min(k - 2);
        let f = pos - i as f64;
        SpherePoint::normalize(&self.knots[i] * (1.0 - f) + &self.knots[i + 1] * f)
    }
}

/// Sphere truth over the observed level range of a dataset.
pub fn truth_sphere(
    truth: &SimTruth,
    v1: f64,
    draws: usize,
    knots: usize,
    seed: u64,
) -> Result<Vec<SpherePoint>> {
    let lo = truth.levels.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = truth
        .levels
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let table = SphereTruthTable::new(&truth.design, v1, (lo, hi), draws, knots, seed)?;
    truth.levels.iter().map(|&l| table.at(l)).collect()
}

/// Range that covers `β₀ + δ · mean(x)` for essentially every draw of `x`.
pub fn level_range(cfg: &SimConfig, design: &SimDesign) -> (f64, f64) {
    let m = cfg.m as f64;
    let (lo, hi) = if cfg.spherical {
        (-1.0 / m.sqrt(), 1.0 / m.sqrt())
    } else {
        let center = design.mu_x.mean();
        let sd = (design.sigma_x.sum() / (m * m)).sqrt();
        (center - 8.0 * sd, center + 8.0 * sd)
    };
    let (a, b) = (cfg.beta0 + cfg.delta * lo, cfg.beta0 + cfg.delta * hi);
    (a.min(b), a.max(b))
}

/// 17 significant digits; parses back to the same `f64`.
pub fn format_exact(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `x0..x{m-1}, y0..y{q-1}, beta` with a header row.
pub fn write_dataset_csv<W: Write>(data: &SimDataset, mut out: W) -> std::io::Result<()> {
    let header: Vec<String> = (0..data.x.ncols())
        .map(|j| format!("x{j}"))
        .chain((0..data.y.ncols()).map(|j| format!("y{j}")))
        .chain(std::iter::once("beta".to_string()))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..data.x.nrows() {
        let fields: Vec<String> = data
            .x
            .row(i)
            .iter()
            .chain(data.y.row(i).iter())
            .chain(std::iter::once(&data.beta[i]))
            .map(|v| format_exact(*v))
            .collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Columns read back from a dataset CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetColumns {
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub beta: Option<Vec<f64>>,
}

pub fn read_dataset_csv<R: BufRead>(input: R) -> Result<DatasetColumns> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid("empty dataset file"))?
        .map_err(|e| Error::invalid(e.to_string()))?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let xs: Vec<usize> = cols
        .iter()
        .enumerate()
        .filter(|(_, c)| c.starts_with('x'))
        .map(|(i, _)| i)
        .collect();
    let ys: Vec<usize> = cols
        .iter()
        .enumerate()
        .filter(|(_, c)| c.starts_with('y'))
        .map(|(i, _)| i)
        .collect();
    let beta_col = cols.iter().position(|c| *c == "beta");
    if xs.is_empty() {
        return Err(Error::invalid("dataset has no x columns"));
    }
    if ys.is_empty() {
        return Err(Error::invalid("dataset has no y columns"));
    }
    let (mut xv, mut yv, mut bv) = (Vec::new(), Vec::new(), Vec::new());
    let mut n = 0;
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::invalid(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .trim()
            .split(',')
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::invalid(format!("line {}: {e}", lineno + 2)))?;
        if fields.len() != cols.len() {
            return Err(Error::invalid(format!(
                "line {}: expected {} fields, got {}",
                lineno + 2,
                cols.len(),
                fields.len()
            )));
        }
        xv.extend(xs.iter().map(|&i| fields[i]));
        yv.extend(ys.iter().map(|&i| fields[i]));
        if let Some(b) = beta_col {
            bv.push(fields[b]);
        }
        n += 1;
    }
    Ok(DatasetColumns {
        x: DMatrix::from_row_slice(n, xs.len(), &xv),
        y: DMatrix::from_row_slice(n, ys.len(), &yv),
        beta: beta_col.map(|_| bv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimConfig {
        SimConfig {
            n: 30,
            seed: 17,
            design_seed: 3,
            ..SimConfig::default()
        }
    }

    #[test]
    fn defaults_match_printed_constants() {
        let c = SimConfig::default();
        assert_eq!(c.mean_vector(), vec![0.0, 1.0, -1.0, 2.0, 0.0]);
        assert_eq!((c.beta0, c.delta, c.v1), (1.0, 0.5, 0.1));
    }

    #[test]
    fn mean_vector_cycles() {
        let c = SimConfig {
            m: 7,
            ..SimConfig::default()
        };
        assert_eq!(c.mean_vector(), vec![0.0, 1.0, -1.0, 2.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn validation_names_key() {
        let c = SimConfig {
            v1: -1.0,
            ..SimConfig::default()
        };
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("v1"));
        let c = SimConfig {
            q: 1,
            ..SimConfig::default()
        };
        assert!(c.validate().unwrap_err().to_string().contains("q"));
    }

    #[test]
    fn deterministic() {
        assert_eq!(simulate(&small()).unwrap(), simulate(&small()).unwrap());
        let other = SimConfig {
            seed: 18,
            ..small()
        };
        assert_ne!(simulate(&small()).unwrap().x, simulate(&other).unwrap().x);
    }

    #[test]
    fn spherical_rows_are_unit() {
        let c = SimConfig {
            spherical: true,
            ..small()
        };
        let x = gen_predictors(&c).unwrap();
        for r in x.row_iter() {
            assert!((r.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let x = gen_predictors(&small()).unwrap();
        assert_eq!(inject_noise(&x, 0.0, 5).unwrap(), x);
        assert_eq!(
            inject_noise(&x, 0.3, 5).unwrap(),
            inject_noise(&x, 0.3, 5).unwrap()
        );
    }

    #[test]
    fn collinearity_touches_only_destination() {
        let x = gen_predictors(&small()).unwrap();
        let out = inject_collinearity(&x, &[(0, 2)], 0.0, 1).unwrap();
        assert_eq!(out.column(2), x.column(0));
        for j in [0, 1, 3, 4] {
            assert_eq!(out.column(j), x.column(j));
        }
        assert!(matches!(
            inject_collinearity(&x, &[(1, 1)], 0.1, 1),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn row_quantile_examples() {
        let y = DMatrix::from_row_slice(
            3,
            4,
            &[1.0, 2.0, 3.0, 4.0, 4.0, 3.0, 2.0, 1.0, 7.0, 7.0, 7.0, 7.0],
        );
        let q = rows_to_quantiles(&y, 2).unwrap();
        assert_eq!(q[0].values(), &[1.75, 3.25]);
        assert_eq!(q[0], q[1]);
        assert_eq!(q[2].values(), &[7.0, 7.0]);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let data = simulate(&small()).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&data, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x0,x1,x2,x3,x4,y0,"));
        let back = read_dataset_csv(std::io::Cursor::new(buf)).unwrap();
        assert_eq!(back.x, data.x);
        assert_eq!(back.y, data.y);
        assert_eq!(back.beta.unwrap(), data.beta);
    }

    #[test]
    fn truth_quantiles_shift_with_levels() {
        let data = simulate(&small()).unwrap();
        let grid = ProbabilityGrid::new(20).unwrap();
        let t = truth_quantiles(&data.truth, grid, 500, 1).unwrap();
        let d = data.truth.levels[1] - data.truth.levels[0];
        for (a, b) in t[0].values().iter().zip(t[1].values()) {
            assert!((b - a - d).abs() < 1e-9);
        }
    }

    #[test]
    fn sphere_truth_is_unit() {
        let c = SimConfig { q: 3, ..small() };
        let data = simulate(&c).unwrap();
        let t = truth_sphere(&data.truth, c.v1, 200, 5, 2).unwrap();
        assert_eq!(t.len(), c.n);
    }
}
