//! Run configuration: a TOML file with `[sim]`, `[sweep]`, `[solver]`,
//! `[theta]`, `[rate]`, `[normality]`, `[fit]` and `[output]` sections.
//!
//! Values resolve as `--set`/`--seed` flags, then `FRECHET_SEED`, then the
//! file, then built-in defaults.

use std::path::PathBuf;

use frechet_core::metric::{MetricTag, SolverConfig};
use frechet_core::{
    EstimatorKind, NormalityConfig, Scenario, SimConfig, SweepConfig, ThetaChoice, ThetaConfig,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "FRECHET_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub estimators: Vec<EstimatorKind>,
    pub metric: MetricTag,
    pub noise_y: f64,
    pub noise_x: f64,
    pub collinear: Vec<(usize, usize)>,
    pub jitter: f64,
    pub master_seed: u64,
    pub held_out: bool,
    pub truth_draws: usize,
    pub parallel: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        let d = SweepConfig::default();
        SweepSection {
            n_grid: d.n_grid,
            replicates: d.replicates,
            estimators: d.estimators,
            metric: d.metric,
            noise_y: d.scenario.noise_y,
            noise_x: d.scenario.noise_x,
            collinear: d.scenario.collinear,
            jitter: d.scenario.jitter,
            master_seed: d.master_seed,
            held_out: d.held_out,
            truth_draws: d.truth_draws,
            parallel: d.parallel,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThetaMode {
    #[default]
    Adaptive,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThetaSection {
    pub mode: ThetaMode,
    pub tau: Option<f64>,
    pub eps: Option<f64>,
}

impl ThetaSection {
    pub fn choice(&self) -> CliResult<ThetaChoice> {
        match self.mode {
            ThetaMode::Adaptive => Ok(ThetaChoice::Adaptive),
            ThetaMode::Fixed => {
                let tau = self.tau.ok_or_else(|| {
                    CliError::Config("theta.tau: required when theta.mode = \"fixed\"".into())
                })?;
                let eps = self.eps.ok_or_else(|| {
                    CliError::Config("theta.eps: required when theta.mode = \"fixed\"".into())
                })?;
                ThetaConfig::new(tau, eps)
                    .map(ThetaChoice::Fixed)
                    .map_err(|e| CliError::Config(format!("theta: {}", e.root())))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateSection {
    pub estimator: EstimatorKind,
    pub lower: f64,
    pub upper: f64,
}

impl Default for RateSection {
    fn default() -> Self {
        RateSection {
            estimator: EstimatorKind::Mgfr,
            lower: -1.4,
            upper: -0.6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalitySection {
    /// Also run the normality experiment during `sweep`.
    pub enabled: bool,
    pub n: usize,
    pub replicates: usize,
    pub estimator: EstimatorKind,
}

impl Default for NormalitySection {
    fn default() -> Self {
        let d = NormalityConfig::default();
        NormalitySection {
            enabled: false,
            n: d.n,
            replicates: d.replicates,
            estimator: d.estimator,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    pub estimator: EstimatorKind,
    pub metric: MetricTag,
    /// Dataset CSV to fit; simulated from `[sim]` when absent.
    pub data: Option<PathBuf>,
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            estimator: EstimatorKind::Gfr,
            metric: MetricTag::QuantileWasserstein,
            data: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Existing sweep CSV for `rate-check`, `report` and `plot`.
    pub results: Option<PathBuf>,
    pub log_x: bool,
    pub log_y: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            results: None,
            log_x: false,
            log_y: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub sweep: SweepSection,
    pub solver: SolverConfig,
    pub theta: ThetaSection,
    pub rate: RateSection,
    pub normality: NormalitySection,
    pub fit: FitSection,
    pub output: OutputSection,
}

/// Flag-level inputs layered over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// `section.key=value` pairs; values are parsed as TOML, falling back to a string.
    pub set: Vec<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub results: Option<PathBuf>,
    pub log_axes: bool,
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_set(table: &mut toml::Table, assignment: &str) -> CliResult<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set {assignment:?}: expected key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Config(format!("--set {assignment:?}: empty key")));
    }
    let (last, parents) = keys.split_last().expect("non-empty");
    let mut cur = table;
    for k in parents {
        let entry = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("{path}: {k} is not a section")))?;
    }
    cur.insert(last.to_string(), parse_value(raw.trim()));
    Ok(())
}

fn set_seed(table: &mut toml::Table, seed: u64) -> CliResult<()> {
    let seed = i64::try_from(seed)
        .map_err(|_| CliError::Config(format!("seed: {seed} exceeds i64::MAX")))?;
    apply_set(table, &format!("sweep.master_seed={seed}"))?;
    apply_set(table, &format!("sim.seed={seed}"))
}

/// Builds the configuration from file text (possibly empty), the seed
/// environment variable and flag overrides.
pub fn resolve(file_text: &str, env_seed: Option<&str>, ov: &Overrides) -> CliResult<RunConfig> {
    let mut table: toml::Table = file_text
        .parse()
        .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    if let Some(raw) = env_seed {
        let seed: u64 = raw.trim().parse().map_err(|_| {
            CliError::Config(format!("{SEED_ENV}: not an unsigned integer: {raw:?}"))
        })?;
        set_seed(&mut table, seed)?;
    }
    for s in &ov.set {
        apply_set(&mut table, s)?;
    }
    if let Some(seed) = ov.seed {
        set_seed(&mut table, seed)?;
    }
    let mut cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
    if let Some(out) = &ov.out {
        cfg.output.dir = out.clone();
    }
    if let Some(r) = &ov.results {
        cfg.output.results = Some(r.clone());
    }
    if ov.log_axes {
        cfg.output.log_x = true;
        cfg.output.log_y = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn prefixed(section: &str, e: frechet_core::Error) -> CliError {
    match e.root() {
        frechet_core::Error::InvalidConfiguration(msg) => {
            CliError::Config(format!("{section}.{msg}"))
        }
        other => CliError::Config(format!("{section}: {other}")),
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.sim.validate().map_err(|e| prefixed("sim", e))?;
        self.solver.validate().map_err(|e| prefixed("solver", e))?;
        self.theta.choice()?;
        self.sweep_config()
            .validate()
            .map_err(|e| prefixed("sweep", e))?;
        if self.rate.lower.partial_cmp(&self.rate.upper) != Some(std::cmp::Ordering::Less) {
            return Err(CliError::Config(format!(
                "rate.lower: must be below rate.upper ({} >= {})",
                self.rate.lower, self.rate.upper
            )));
        }
        if self.normality.n < 2 {
            return Err(CliError::Config("normality.n: must be at least 2".into()));
        }
        Ok(())
    }

    pub fn sweep_config(&self) -> SweepConfig {
        let s = &self.sweep;
        SweepConfig {
            n_grid: s.n_grid.clone(),
            replicates: s.replicates,
            estimators: s.estimators.clone(),
            scenario: Scenario {
                noise_y: s.noise_y,
                noise_x: s.noise_x,
                collinear: s.collinear.clone(),
                jitter: s.jitter,
            },
            master_seed: s.master_seed,
            metric: s.metric,
            sim: self.sim.clone(),
            solver: self.solver,
            theta: self.theta.choice().unwrap_or_default(),
            held_out: s.held_out,
            truth_draws: s.truth_draws,
            parallel: s.parallel,
        }
    }

    pub fn normality_config(&self) -> NormalityConfig {
        NormalityConfig {
            n: self.normality.n,
            replicates: self.normality.replicates,
            estimator: self.normality.estimator,
            master_seed: self.sweep.master_seed,
            sim: self.sim.clone(),
            solver: self.solver,
            theta: self.theta.choice().unwrap_or_default(),
            query: None,
            parallel: self.sweep.parallel,
        }
    }
}
