use nalgebra::{DMatrix, DVector};

use super::{positive_weight_sum, InitStrategy, MeanSolution, MetricSpace, SolverConfig};
use crate::error::{Error, Result};
use crate::linalg::{frobenius, max_asymmetry, sym_eigenvalues, sym_sqrt, symmetrize};

const SYMMETRY_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;

/// A Gaussian measure `N(mu, sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPoint {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
}

impl GaussianPoint {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>) -> Result<Self> {
        if !sigma.is_square() || sigma.nrows() != mu.len() {
            return Err(Error::incompatible(format!(
                "mean has dimension {} but covariance is {}x{}",
                mu.len(),
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        if mu.iter().chain(sigma.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("Gaussian parameters must be finite"));
        }
        if max_asymmetry(&sigma) > SYMMETRY_TOL {
            return Err(Error::invalid("covariance is not symmetric"));
        }
        let min_ev = sym_eigenvalues(&sigma).first().copied().unwrap_or(0.0);
        if min_ev < -PSD_TOL {
            return Err(Error::invalid(format!(
                "covariance is not positive semidefinite (min eigenvalue {min_ev:e})"
            )));
        }
        Ok(GaussianPoint { mu, sigma })
    }

    /// One-dimensional `N(mean, sd²)`.
    pub fn univariate(mean: f64, sd: f64) -> Result<Self> {
        Self::new(
            DVector::from_element(1, mean),
            DMatrix::from_element(1, 1, sd * sd),
        )
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }
}

/// Squared Bures–Wasserstein distance
/// `‖μ_P − μ_Q‖² + Tr(Σ_P + Σ_Q − 2 (Σ_P^{1/2} Σ_Q Σ_P^{1/2})^{1/2})`.
///
/// The covariance term is evaluated as `‖Σ_P^{1/2} − Σ_Q^{1/2} U‖²_F` with
/// `U` the orthogonal polar factor of `Σ_Q^{1/2} Σ_P^{1/2}`, which equals the
/// trace form but does not cancel catastrophically for nearby arguments.
pub fn bures_wasserstein_sq(p: &GaussianPoint, q: &GaussianPoint) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::incompatible(format!(
            "Gaussian dimensions differ ({} vs {})",
            p.dim(),
            q.dim()
        )));
    }
    let mean_term = (&p.mu - &q.mu).norm_squared();
    let root_p = sym_sqrt(&p.sigma);
    let root_q = sym_sqrt(&q.sigma);
    let svd = (&root_q * &root_p).svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let aligned = &root_q * (u * v_t);
    Ok(mean_term + (root_p - aligned).norm_squared())
}

/// Gaussian measures of a fixed dimension under the Bures–Wasserstein metric.
///
/// The weighted mean is the barycenter: the weighted average of the means and
/// the fixed point of `S ↦ S^{-1/2} (Σ λ_i (S^{1/2} Σ_i S^{1/2})^{1/2})² S^{-1/2}`
/// for the covariance, with normalized weights `λ`. Negative weights are
/// accepted; the inner sum is then projected back onto the PSD cone each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaussianSpace {
    pub dim: usize,
}

impl GaussianSpace {
    pub fn new(dim: usize) -> Self {
        GaussianSpace { dim }
    }
}

fn psd_project(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = symmetrize(a).symmetric_eigen();
    let vals = eig.eigenvalues.map(|l| l.max(0.0));
    let q = &eig.eigenvectors;
    let mut scaled = q.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= vals[j];
    }
    symmetrize(&(scaled * q.transpose()))
}

/// `S^{-1/2}` with zero eigenvalues mapped to zero.
fn inv_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = symmetrize(a).symmetric_eigen();
    let scale = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let vals = eig.eigenvalues.map(|l| {
        if l > scale * 1e-14 && l > 0.0 {
            1.0 / l.sqrt()
        } else {
            0.0
        }
    });
    let q = &eig.eigenvectors;
    let mut scaled = q.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= vals[j];
    }
    symmetrize(&(scaled * q.transpose()))
}

impl MetricSpace for GaussianSpace {
    type Point = GaussianPoint;

    fn dist_sq(&self, a: &GaussianPoint, b: &GaussianPoint) -> Result<f64> {
        bures_wasserstein_sq(a, b)
    }

    fn frechet_mean(
        &self,
        samples: &[GaussianPoint],
        weights: &[f64],
        cfg: &SolverConfig,
    ) -> Result<MeanSolution<GaussianPoint>> {
        let total = positive_weight_sum(samples.len(), weights)?;
        let d = samples[0].dim();
        if samples.iter().any(|s| s.dim() != d) {
            return Err(Error::incompatible("Gaussian samples differ in dimension"));
        }
        let lambda: Vec<f64> = weights.iter().map(|w| w / total).collect();

        let mut mu = DVector::zeros(d);
        for (s, &l) in samples.iter().zip(&lambda) {
            mu += &s.mu * l;
        }

        let mut cov = match cfg.init {
            InitStrategy::WeightedAverage => {
                let mut acc = DMatrix::zeros(d, d);
                for (s, &l) in samples.iter().zip(&lambda) {
                    acc += &s.sigma * l;
                }
                psd_project(&acc)
            }
            InitStrategy::FirstSample => samples[0].sigma.clone(),
        };

        let mut iterations = 0;
        let mut converged = false;
        while iterations < cfg.k_max {
            iterations += 1;
            let root = sym_sqrt(&cov);
            let mut inner = DMatrix::zeros(d, d);
            for (s, &l) in samples.iter().zip(&lambda) {
                if l == 0.0 {
                    continue;
                }
                inner += sym_sqrt(&(&root * &s.sigma * &root)) * l;
            }
            let inner = psd_project(&inner);
            let root_inv = inv_sqrt(&cov);
            let next = if root_inv.iter().all(|v| *v == 0.0) {
                // collapsed to a point mass
                DMatrix::zeros(d, d)
            } else {
                psd_project(&(&root_inv * &inner * &inner * &root_inv))
            };
            let step = frobenius(&(&next - &cov));
            cov = next;
            if step < cfg.eps_tol {
                converged = true;
                break;
            }
        }
        Ok(MeanSolution {
            point: GaussianPoint::new(mu, symmetrize(&cov))?,
            iterations,
            converged,
        })
    }
}
