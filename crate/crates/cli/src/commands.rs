use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use frechet_core::evaluation::{
    self, comparison_report, read_sweep_csv, summary_json, write_sweep_csv, Normality, SweepResult,
};
use frechet_core::metric::{MetricSpace, MetricTag};
use frechet_core::seeds::{derive_seed, STREAM_TRUTH};
use frechet_core::simulation::{
    self, format_exact, read_dataset_csv, rows_to_gaussians, rows_to_quantiles, rows_to_sphere,
    write_dataset_csv,
};
use frechet_core::{
    normality_experiment, rate_estimate, DMatrix, EstimatorKind, GaussianSpace, QuantileSpace,
    SphereSpace, SweepConfig, TrainedModel,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::plot::{render_svg, PlotOptions};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    command: &'a str,
    seed: u64,
    config: &'a RunConfig,
    files: &'a [FileDigest],
    content_hash: String,
}

/// Hash over every output file's name and digest, in write order.
pub fn content_hash(files: &[FileDigest]) -> String {
    let mut h = Sha256::new();
    for f in files {
        h.update(f.name.as_bytes());
        h.update(b"\0");
        h.update(f.sha256.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Collects the files a command writes and emits the manifest last.
struct Outputs {
    dir: PathBuf,
    files: Vec<FileDigest>,
}

impl Outputs {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)
            .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileDigest {
            name: name.to_string(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(path)
    }

    fn finish(mut self, command: &str, seed: u64, cfg: &RunConfig) -> CliResult<String> {
        let hash = content_hash(&self.files);
        let manifest = Manifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            command,
            seed,
            config: cfg,
            files: &self.files,
            content_hash: hash.clone(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text)
            .map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        self.files.clear();
        Ok(hash)
    }
}

/// Writes `dataset.csv` and `manifest.json`; returns the content hash.
pub fn cmd_simulate(cfg: &RunConfig) -> CliResult<String> {
    let data = simulation::simulate(&cfg.sim)?;
    let mut buf = Vec::new();
    write_dataset_csv(&data, &mut buf).map_err(|e| CliError::io("formatting dataset", e))?;
    let mut out = Outputs::new(&cfg.output.dir)?;
    let path = out.write("dataset.csv", &buf)?;
    let hash = out.finish("simulate", cfg.sim.seed, cfg)?;
    println!("wrote {} ({} rows)", path.display(), data.x.nrows());
    println!("content hash {hash}");
    Ok(hash)
}

fn fit_rows<S: MetricSpace + Clone>(
    cfg: &RunConfig,
    space: S,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    responses: Vec<S::Point>,
    coords: impl Fn(&S::Point) -> Vec<f64>,
    truth: Option<Vec<S::Point>>,
) -> CliResult<(String, Option<f64>)> {
    let model = TrainedModel::train(
        space,
        cfg.fit.estimator,
        x,
        y,
        responses,
        Some(cfg.theta.choice()?),
    )?;
    let fits = model.predict_batch(x, &cfg.solver)?;
    let loss = truth.map(|t| model.in_sample_loss(&fits, &t)).transpose()?;
    let width = fits.first().map_or(0, |f| coords(&f.omega).len());
    let mut s = String::from("row,converged,iterations");
    for j in 0..width {
        s.push_str(&format!(",w{j}"));
    }
    s.push('\n');
    for (i, f) in fits.iter().enumerate() {
        s.push_str(&format!("{i},{},{}", u8::from(f.converged), f.iterations));
        for v in coords(&f.omega) {
            s.push(',');
            s.push_str(&format_exact(v));
        }
        s.push('\n');
    }
    Ok((s, loss))
}

/// Fits the configured estimator at every training row and writes `fits.csv`.
/// Returns the in-sample loss when the data were simulated.
pub fn cmd_fit(cfg: &RunConfig) -> CliResult<Option<f64>> {
    let (x, y, truth) = match &cfg.fit.data {
        Some(path) => {
            let f = File::open(path)
                .map_err(|e| CliError::io(format!("opening {}", path.display()), e))?;
            let d = read_dataset_csv(BufReader::new(f))?;
            (d.x, d.y, None)
        }
        None => {
            let d = simulation::simulate(&cfg.sim)?;
            (d.x, d.y, Some(d.truth))
        }
    };
    let seed = derive_seed(cfg.sim.seed, &[STREAM_TRUTH]);
    let draws = cfg.sweep.truth_draws;
    let (csv, loss) = match cfg.fit.metric {
        MetricTag::QuantileWasserstein => {
            let grid = cfg.sim.grid()?;
            let truth = truth
                .clone()
                .map(|t| simulation::truth_quantiles(&t, grid, draws, seed))
                .transpose()?;
            let responses = rows_to_quantiles(&y, grid.len())?;
            fit_rows(
                cfg,
                QuantileSpace::new(grid),
                &x,
                &y,
                responses,
                |p| p.values().to_vec(),
                truth,
            )?
        }
        MetricTag::Bures => {
            let truth = truth
                .clone()
                .map(|t| simulation::truth_gaussians(&t, draws, seed))
                .transpose()?;
            let responses = rows_to_gaussians(&y)?;
            fit_rows(
                cfg,
                GaussianSpace::new(1),
                &x,
                &y,
                responses,
                |p| vec![p.mu()[0], p.sigma()[(0, 0)].max(0.0).sqrt()],
                truth,
            )?
        }
        MetricTag::Sphere => {
            let truth = truth
                .clone()
                .map(|t| simulation::truth_sphere(&t, cfg.sim.v1, draws.min(4000), 33, seed))
                .transpose()?;
            let responses = rows_to_sphere(&y)?;
            fit_rows(
                cfg,
                SphereSpace::new(y.ncols()),
                &x,
                &y,
                responses,
                |p| p.coords().iter().cloned().collect(),
                truth,
            )?
        }
    };
    let mut out = Outputs::new(&cfg.output.dir)?;
    let path = out.write("fits.csv", csv.as_bytes())?;
    let hash = out.finish("fit", cfg.sim.seed, cfg)?;
    println!(
        "wrote {} ({} fits, {})",
        path.display(),
        x.nrows(),
        cfg.fit.estimator
    );
    if let Some(l) = loss {
        println!("in-sample loss {l:.6e}");
    }
    println!("content hash {hash}");
    Ok(loss)
}

/// Runs the sweep one sample size at a time, rewriting `results.csv` after
/// each so completed work survives a later failure.
fn run_sweep_incremental(cfg: &RunConfig, out: &mut Outputs) -> CliResult<SweepResult> {
    let full = cfg.sweep_config();
    let mut merged = SweepResult {
        metric: full.metric,
        estimators: full.estimators.clone(),
        n_grid: Vec::new(),
        replicates: full.replicates,
        records: Vec::new(),
    };
    for &n in &full.n_grid {
        let part = evaluation::run_sweep(&SweepConfig {
            n_grid: vec![n],
            ..full.clone()
        })?;
        merged.n_grid.push(n);
        merged.records.extend(part.records);
        let mut buf = Vec::new();
        write_sweep_csv(&merged, &mut buf).map_err(|e| CliError::io("formatting results", e))?;
        out.write("results.csv", &buf)?;
    }
    Ok(merged)
}

fn summary_outputs(cfg: &RunConfig, result: &SweepResult, out: &mut Outputs) -> CliResult<()> {
    let normality: Option<Normality> = if cfg.normality.enabled {
        Some(normality_experiment(&cfg.normality_config())?.diagnostic)
    } else {
        None
    };
    out.write("summary.json", summary_json(result, normality).as_bytes())?;
    Ok(())
}

/// Writes `results.csv`, `summary.json`, `plot.svg` and `manifest.json`.
pub fn cmd_sweep(cfg: &RunConfig) -> CliResult<SweepResult> {
    let mut out = Outputs::new(&cfg.output.dir)?;
    let result = match run_sweep_incremental(cfg, &mut out) {
        Ok(r) => r,
        Err(e) => {
            let _ = out.finish("sweep", cfg.sweep.master_seed, cfg);
            return Err(e);
        }
    };
    summary_outputs(cfg, &result, &mut out)?;
    out.write(
        "plot.svg",
        render_svg(&result, plot_options(cfg))?.as_bytes(),
    )?;
    let hash = out.finish("sweep", cfg.sweep.master_seed, cfg)?;
    println!(
        "swept {} sample sizes x {} replicates ({} skipped)",
        result.n_grid.len(),
        result.replicates,
        result.total_skipped()
    );
    println!("wrote {}", cfg.output.dir.display());
    println!("content hash {hash}");
    Ok(result)
}

fn plot_options(cfg: &RunConfig) -> PlotOptions {
    PlotOptions {
        log_x: cfg.output.log_x,
        log_y: cfg.output.log_y,
    }
}

/// Reads `path` as a sweep CSV.
pub fn load_results(path: &Path, metric: MetricTag) -> CliResult<SweepResult> {
    let f = File::open(path).map_err(|e| CliError::io(format!("opening {}", path.display()), e))?;
    read_sweep_csv(BufReader::new(f), metric)
        .map_err(|e| CliError::Runtime(format!("{}: {}", path.display(), e.root())))
}

/// Results from `output.results` when set, otherwise from a fresh sweep.
fn obtain_results(cfg: &RunConfig, command: &str) -> CliResult<(SweepResult, Outputs)> {
    let mut out = Outputs::new(&cfg.output.dir)?;
    let result = match &cfg.output.results {
        Some(p) => load_results(p, cfg.sweep.metric)?,
        None => match run_sweep_incremental(cfg, &mut out) {
            Ok(r) => r,
            Err(e) => {
                let _ = out.finish(command, cfg.sweep.master_seed, cfg);
                return Err(e);
            }
        },
    };
    Ok((result, out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateCheck {
    pub estimator: EstimatorKind,
    pub slope: f64,
    pub stderr: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

/// Fits the rate and compares it with `[rate]`; the caller exits nonzero
/// when `pass` is false.
pub fn cmd_rate_check(cfg: &RunConfig) -> CliResult<RateCheck> {
    let (result, mut out) = obtain_results(cfg, "rate-check")?;
    let fit = rate_estimate(&result, cfg.rate.estimator)?;
    let check = RateCheck {
        estimator: cfg.rate.estimator,
        slope: fit.slope,
        stderr: fit.stderr,
        lower: cfg.rate.lower,
        upper: cfg.rate.upper,
        pass: fit.slope >= cfg.rate.lower && fit.slope <= cfg.rate.upper,
    };
    let mut text =
        serde_json::to_string_pretty(&check).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    out.write("rate.json", text.as_bytes())?;
    out.finish("rate-check", cfg.sweep.master_seed, cfg)?;
    println!(
        "{}: slope {:.4} (se {:.4}), band [{}, {}]: {}",
        check.estimator,
        check.slope,
        check.stderr,
        check.lower,
        check.upper,
        if check.pass { "PASS" } else { "FAIL" }
    );
    Ok(check)
}

/// Prints and writes the comparison table (`report.txt`).
pub fn cmd_report(cfg: &RunConfig) -> CliResult<String> {
    let (result, mut out) = obtain_results(cfg, "report")?;
    let table = comparison_report(&result)?.to_table();
    out.write("report.txt", table.as_bytes())?;
    out.finish("report", cfg.sweep.master_seed, cfg)?;
    print!("{table}");
    Ok(table)
}

/// Renders `plot.svg` from an existing results CSV.
pub fn cmd_plot(cfg: &RunConfig) -> CliResult<PathBuf> {
    let path = cfg.output.results.as_ref().ok_or_else(|| {
        CliError::Config("output.results: plot needs a results CSV (--results PATH)".into())
    })?;
    let result = load_results(path, cfg.sweep.metric)?;
    let svg = render_svg(&result, plot_options(cfg))?;
    let mut out = Outputs::new(&cfg.output.dir)?;
    let written = out.write("plot.svg", svg.as_bytes())?;
    out.finish("plot", cfg.sweep.master_seed, cfg)?;
    println!("wrote {}", written.display());
    Ok(written)
}
