use serde::{Deserialize, Serialize};

use super::isotonic::pava;
use super::{positive_weight_sum, MeanSolution, MetricSpace, SolverConfig};
use crate::error::{Error, Result};

/// Midpoint probability grid `u_j = (2j − 1) / (2M)`, `j = 1..=M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProbabilityGrid {
    size: usize,
}

impl ProbabilityGrid {
    pub const DEFAULT_SIZE: usize = 100;

    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::invalid(format!(
                "probability grid needs at least 2 points, got {size}"
            )));
        }
        Ok(ProbabilityGrid { size })
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, j: usize) -> f64 {
        (2 * j + 1) as f64 / (2 * self.size) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.size).map(|j| self.point(j)).collect()
    }
}

impl Default for ProbabilityGrid {
    fn default() -> Self {
        ProbabilityGrid {
            size: Self::DEFAULT_SIZE,
        }
    }
}

/// A one-dimensional distribution, stored as its quantile function evaluated
/// on a [`ProbabilityGrid`]. Values are finite and nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileFunction {
    grid: ProbabilityGrid,
    values: Vec<f64>,
}

impl QuantileFunction {
    pub fn new(grid: ProbabilityGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "quantile vector has {} values for a grid of {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("quantile values must be finite"));
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::invalid("quantile values must be nondecreasing"));
        }
        Ok(QuantileFunction { grid, values })
    }

    pub fn constant(grid: ProbabilityGrid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> ProbabilityGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Adds `c` to every quantile (location shift of the distribution).
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|v| v + c).collect())
    }
}

/// Quantile function of the empirical distribution of `values`, read off at
/// the grid points.
///
/// Order statistics `x_(1) ≤ … ≤ x_(n)` sit at plotting positions
/// `(k − 1) / (n − 1)` and are joined linearly, so `[1, 2, 3, 4]` gives
/// `1.75` at `u = 0.25`.
pub fn empirical_quantile(values: &[f64], grid: ProbabilityGrid) -> Result<QuantileFunction> {
    if values.is_empty() {
        return Err(Error::invalid("empirical_quantile: empty sample"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("empirical_quantile: non-finite value"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let q = (0..grid.len())
        .map(|j| {
            if n == 1 {
                return sorted[0];
            }
            let h = grid.point(j) * (n - 1) as f64;
            let lo = (h.floor() as usize).min(n - 1);
            let hi = (lo + 1).min(n - 1);
            let frac = h - lo as f64;
            if frac == 0.0 || lo == hi {
                sorted[lo]
            } else {
                sorted[lo] + frac * (sorted[hi] - sorted[lo])
            }
        })
        .collect::<Vec<_>>();
    // Interpolation between sorted values is monotone up to rounding; the
    // projection removes any 1-ulp inversions.
    QuantileFunction::new(grid, pava(&q))
}

/// Squared 2-Wasserstein distance between two quantile-represented
/// distributions, discretised as `(1/M) Σ_j (q_a,j − q_b,j)²`.
pub fn wasserstein_sq_quantile(a: &QuantileFunction, b: &QuantileFunction) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::incompatible(format!(
            "quantile grids differ ({} vs {})",
            a.grid.len(),
            b.grid.len()
        )));
    }
    let sum: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.grid.len() as f64)
}

/// Weighted Fréchet mean in the quantile space: weighted average of the
/// quantile vectors followed by the isotonic projection.
///
/// Individual weights may be negative; only a non-positive total is rejected.
pub fn frechet_mean_quantile(
    samples: &[QuantileFunction],
    weights: &[f64],
) -> Result<QuantileFunction> {
    let total = positive_weight_sum(samples.len(), weights)?;
    let grid = samples[0].grid;
    let mut g = vec![0.0; grid.len()];
    for (s, &w) in samples.iter().zip(weights) {
        if s.grid != grid {
            return Err(Error::incompatible("samples live on different grids"));
        }
        if w == 0.0 {
            continue;
        }
        for (acc, v) in g.iter_mut().zip(&s.values) {
            *acc += w * v;
        }
    }
    for v in &mut g {
        *v /= total;
    }
    QuantileFunction::new(grid, pava(&g))
}

/// The quantile/Wasserstein space on a fixed grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct QuantileSpace {
    pub grid: ProbabilityGrid,
}

impl QuantileSpace {
    pub fn new(grid: ProbabilityGrid) -> Self {
        QuantileSpace { grid }
    }
}

impl MetricSpace for QuantileSpace {
    type Point = QuantileFunction;

    fn dist_sq(&self, a: &QuantileFunction, b: &QuantileFunction) -> Result<f64> {
        wasserstein_sq_quantile(a, b)
    }

    /// Closed form; always one iteration.
    fn frechet_mean(
        &self,
        samples: &[QuantileFunction],
        weights: &[f64],
        _cfg: &SolverConfig,
    ) -> Result<MeanSolution<QuantileFunction>> {
        Ok(MeanSolution {
            point: frechet_mean_quantile(samples, weights)?,
            iterations: 1,
            converged: true,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn qf(values: &[f64]) -> QuantileFunction {
        QuantileFunction::new(ProbabilityGrid::new(values.len()).unwrap(), values.to_vec()).unwrap()
    }

    /// Inverts the piecewise-linear CDF through the points
    /// `(x_(k), (k − 1)/(n − 1))` by bisection.
    fn cdf_inversion(values: &[f64], u: f64) -> f64 {
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let cdf = |x: f64| -> f64 {
            if x <= s[0] {
                return 0.0;
            }
            if x >= s[n - 1] {
                return 1.0;
            }
            let k = s.iter().rposition(|&v| v <= x).unwrap();
            let (x0, x1) = (s[k], s[k + 1]);
            let (p0, p1) = (k as f64 / (n - 1) as f64, (k + 1) as f64 / (n - 1) as f64);
            if x1 == x0 {
                p1
            } else {
                p0 + (x - x0) / (x1 - x0) * (p1 - p0)
            }
        };
        let (mut lo, mut hi) = (s[0], s[n - 1]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn grid_midpoints() {
        let g = ProbabilityGrid::new(2).unwrap();
        assert_eq!(g.points(), vec![0.25, 0.75]);
        assert!(ProbabilityGrid::new(1).is_err());
        let g = ProbabilityGrid::new(100).unwrap();
        let p = g.points();
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert!(p[0] > 0.0 && p[99] < 1.0);
    }

    #[test]
    fn single_value_is_constant() {
        let g = ProbabilityGrid::new(7).unwrap();
        let q = empirical_quantile(&[5.0], g).unwrap();
        assert!(q.values().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn degenerate_sample_is_constant() {
        let g = ProbabilityGrid::new(9).unwrap();
        let q = empirical_quantile(&[3.5; 6], g).unwrap();
        assert!(q.values().iter().all(|&v| v == 3.5));
    }

    #[test]
    fn four_values_two_points() {
        let g = ProbabilityGrid::new(2).unwrap();
        let q = empirical_quantile(&[4.0, 2.0, 1.0, 3.0], g).unwrap();
        assert_eq!(q.values(), &[1.75, 3.25]);
        for (j, u) in g.points().into_iter().enumerate() {
            assert!((cdf_inversion(&[1.0, 2.0, 3.0, 4.0], u) - q.values()[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_sample_rejected() {
        assert!(matches!(
            empirical_quantile(&[], ProbabilityGrid::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn wasserstein_examples() {
        let a = qf(&[0.0, 1.0]);
        let b = qf(&[1.0, 3.0]);
        assert_eq!(wasserstein_sq_quantile(&a, &b).unwrap(), 2.5);
        assert_eq!(wasserstein_sq_quantile(&a, &a).unwrap(), 0.0);
        let shifted = a.shifted(0.75).unwrap();
        assert!((wasserstein_sq_quantile(&shifted, &a).unwrap() - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let a = qf(&[0.0, 1.0]);
        let b = qf(&[0.0, 1.0, 2.0]);
        assert!(matches!(
            wasserstein_sq_quantile(&a, &b),
            Err(Error::IncompatibleSpaces(_))
        ));
    }

    #[test]
    fn mean_of_single_sample() {
        let a = qf(&[0.5, 1.0, 4.0]);
        assert_eq!(
            frechet_mean_quantile(std::slice::from_ref(&a), &[1.0]).unwrap(),
            a
        );
        assert_eq!(
            frechet_mean_quantile(&[a.clone(), a.clone()], &[0.3, 2.0]).unwrap(),
            a
        );
    }

    #[test]
    fn weighted_mean_matches_grid_search() {
        let samples = [qf(&[0.0, 0.0]), qf(&[2.0, 2.0])];
        let w = [1.0, 3.0];
        let mean = frechet_mean_quantile(&samples, &w).unwrap();
        assert_eq!(mean.values(), &[1.5, 1.5]);

        // brute force over monotone pairs on a 0.01 lattice
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=300 {
            for j in i..=300 {
                let (a, b) = (i as f64 * 0.01, j as f64 * 0.01);
                let cand = qf(&[a, b]);
                let obj: f64 = samples
                    .iter()
                    .zip(&w)
                    .map(|(s, wi)| wi * wasserstein_sq_quantile(s, &cand).unwrap())
                    .sum();
                if obj < best.0 {
                    best = (obj, a, b);
                }
            }
        }
        assert!((best.1 - 1.5).abs() < 1e-9 && (best.2 - 1.5).abs() < 1e-9);
    }

    #[test]
    fn negative_weights_allowed_with_positive_sum() {
        let samples = [qf(&[0.0, 1.0]), qf(&[1.0, 2.0])];
        let m = frechet_mean_quantile(&samples, &[-0.5, 1.5]).unwrap();
        assert_eq!(m.values(), &[1.5, 2.5]);
    }

    #[test]
    fn nonpositive_weight_sum_rejected() {
        let samples = [qf(&[0.0, 1.0]), qf(&[1.0, 2.0])];
        assert!(matches!(
            frechet_mean_quantile(&samples, &[-1.0, 1.0]),
            Err(Error::DegenerateWeights { .. })
        ));
        assert!(matches!(
            frechet_mean_quantile(&samples, &[1.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    proptest! {
        #[test]
        fn equal_weights_average_then_project(
            rows in prop::collection::vec(prop::collection::vec(-5f64..5.0, 6), 1..8),
            w in 0.1f64..10.0,
        ) {
            let grid = ProbabilityGrid::new(6).unwrap();
            let samples: Vec<_> = rows
                .iter()
                .map(|r| empirical_quantile(r, grid).unwrap())
                .collect();
            let weights = vec![w; samples.len()];
            let mean = frechet_mean_quantile(&samples, &weights).unwrap();
            let mut avg = vec![0.0; 6];
            for s in &samples {
                for (a, v) in avg.iter_mut().zip(s.values()) {
                    *a += v / samples.len() as f64;
                }
            }
            let expected = pava(&avg);
            for (a, b) in mean.values().iter().zip(&expected) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn permutation_invariant(mut v in prop::collection::vec(-100f64..100.0, 1..20), seed in 0u64..1000) {
            let grid = ProbabilityGrid::new(11).unwrap();
            let a = empirical_quantile(&v, grid).unwrap();
            let k = (seed as usize) % v.len();
            v.rotate_left(k);
            v.reverse();
            let b = empirical_quantile(&v, grid).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
