use nalgebra::DVector;

use super::{positive_weight_sum, InitStrategy, MeanSolution, MetricSpace, SolverConfig};
use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-12;
const MAX_HALVINGS: usize = 60;

/// A point on the unit sphere `S^{d−1} ⊂ R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    p: DVector<f64>,
}

impl SpherePoint {
    pub fn new(p: DVector<f64>) -> Result<Self> {
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sphere point must be finite"));
        }
        if (p.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::invalid(format!(
                "sphere point has norm {}, expected 1",
                p.norm()
            )));
        }
        Ok(SpherePoint { p })
    }

    /// Scales a nonzero vector onto the sphere.
    pub fn normalize(v: DVector<f64>) -> Result<Self> {
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid(
                "cannot normalize a zero or non-finite vector",
            ));
        }
        Ok(SpherePoint { p: v / norm })
    }

    pub fn from_slice(v: &[f64]) -> Result<Self> {
        Self::new(DVector::from_row_slice(v))
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.p
    }

    /// `2·atan2(‖a − b‖, ‖a + b‖)`; accurate near 0 and π, unlike `acos`.
    fn angle_to(&self, other: &SpherePoint) -> f64 {
        2.0 * (&self.p - &other.p)
            .norm()
            .atan2((&self.p + &other.p).norm())
    }

    /// Riemannian logarithm; zero for the point itself and for its antipode.
    fn log(&self, other: &SpherePoint) -> DVector<f64> {
        let cos = self.p.dot(&other.p).clamp(-1.0, 1.0);
        let theta = self.angle_to(other);
        let residual = &other.p - &self.p * cos;
        let rn = residual.norm();
        if rn < 1e-15 {
            DVector::zeros(self.dim())
        } else {
            residual * (theta / rn)
        }
    }

    fn exp(&self, v: &DVector<f64>) -> SpherePoint {
        let t = v.norm();
        if t < 1e-300 {
            return self.clone();
        }
        let q = &self.p * t.cos() + v * (t.sin() / t);
        // renormalize against drift
        let n = q.norm();
        SpherePoint { p: q / n }
    }
}

/// Squared geodesic (great-circle) distance.
pub fn sphere_geodesic_sq(a: &SpherePoint, b: &SpherePoint) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::incompatible(format!(
            "sphere dimensions differ ({} vs {})",
            a.dim(),
            b.dim()
        )));
    }
    let theta = a.angle_to(b);
    Ok(theta * theta)
}

fn objective(samples: &[SpherePoint], weights: &[f64], p: &SpherePoint) -> f64 {
    samples
        .iter()
        .zip(weights)
        .map(|(y, w)| {
            let t = p.angle_to(y);
            w * t * t
        })
        .sum()
}

/// Weighted Fréchet mean on the sphere by Riemannian gradient descent.
///
/// Each iteration moves along `Σ λ_i log_ω(y_i)` (normalized weights) with
/// step 1, halving while the objective increases. Stops when the Euclidean
/// step `‖ω_k − ω_{k−1}‖` drops below `cfg.eps_tol`, or after `cfg.k_max`
/// iterations with `converged = false`.
pub fn frechet_mean_sphere(
    samples: &[SpherePoint],
    weights: &[f64],
    cfg: &SolverConfig,
) -> Result<(SpherePoint, usize, bool)> {
    cfg.validate()?;
    let total = positive_weight_sum(samples.len(), weights)?;
    let d = samples[0].dim();
    if samples.iter().any(|s| s.dim() != d) {
        return Err(Error::incompatible("sphere samples differ in dimension"));
    }
    let lambda: Vec<f64> = weights.iter().map(|w| w / total).collect();

    let mut omega = match cfg.init {
        InitStrategy::WeightedAverage => {
            let mut avg = DVector::zeros(d);
            for (s, &l) in samples.iter().zip(&lambda) {
                avg += &s.p * l;
            }
            SpherePoint::normalize(avg).map_err(|_| {
                Error::invalid("weighted samples cancel out; the mean is not identifiable")
            })?
        }
        InitStrategy::FirstSample => samples[0].clone(),
    };
    let mut current = objective(samples, &lambda, &omega);

    let mut k = 0;
    while k < cfg.k_max {
        k += 1;
        let mut grad = DVector::zeros(d);
        for (s, &l) in samples.iter().zip(&lambda) {
            if l != 0.0 {
                grad += omega.log(s) * l;
            }
        }
        let mut step = 1.0;
        let mut next = omega.exp(&grad);
        let mut value = objective(samples, &lambda, &next);
        let mut halvings = 0;
        while value > current && halvings < MAX_HALVINGS {
            step *= 0.5;
            next = omega.exp(&(&grad * step));
            value = objective(samples, &lambda, &next);
            halvings += 1;
        }
        if value > current {
            // no descent along the gradient at any tested step
            next = omega.clone();
            value = current;
        }
        let moved = (&next.p - &omega.p).norm();
        omega = next;
        current = value;
        if moved < cfg.eps_tol {
            return Ok((omega, k, true));
        }
    }
    Ok((omega, cfg.k_max, false))
}

/// The unit sphere in `R^dim` with the geodesic metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SphereSpace {
    pub dim: usize,
}

impl SphereSpace {
    pub fn new(dim: usize) -> Self {
        SphereSpace { dim }
    }
}

impl MetricSpace for SphereSpace {
    type Point = SpherePoint;

    fn dist_sq(&self, a: &SpherePoint, b: &SpherePoint) -> Result<f64> {
        sphere_geodesic_sq(a, b)
    }

    fn frechet_mean(
        &self,
        samples: &[SpherePoint],
        weights: &[f64],
        cfg: &SolverConfig,
    ) -> Result<MeanSolution<SpherePoint>> {
        let (point, iterations, converged) = frechet_mean_sphere(samples, weights, cfg)?;
        Ok(MeanSolution {
            point,
            iterations,
            converged,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sp(v: &[f64]) -> SpherePoint {
        SpherePoint::normalize(DVector::from_row_slice(v)).unwrap()
    }

    #[test]
    fn distance_examples() {
        let a = sp(&[1.0, 0.0, 0.0]);
        let b = sp(&[-1.0, 0.0, 0.0]);
        let c = sp(&[0.0, 1.0, 0.0]);
        assert_eq!(sphere_geodesic_sq(&a, &a).unwrap(), 0.0);
        assert!((sphere_geodesic_sq(&a, &b).unwrap() - PI * PI).abs() < 1e-12);
        assert!((sphere_geodesic_sq(&a, &c).unwrap() - PI * PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_unit() {
        assert!(matches!(
            SpherePoint::from_slice(&[1.0, 1.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn equal_samples_converge_immediately() {
        let p = sp(&[0.3, -0.2, 0.9]);
        let (m, iters, conv) = frechet_mean_sphere(
            &vec![p.clone(); 4],
            &[1.0, 2.0, 0.5, 1.0],
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(conv);
        assert!(iters <= 1);
        assert!((m.coords() - p.coords()).norm() < 1e-12);
    }

    #[test]
    fn zero_weight_ignored() {
        let a = sp(&[1.0, 0.2, 0.0]);
        let b = sp(&[0.0, 1.0, 0.3]);
        let (m, _, conv) =
            frechet_mean_sphere(&[a.clone(), b], &[1.0, 0.0], &SolverConfig::default()).unwrap();
        assert!(conv);
        assert!((m.coords() - a.coords()).norm() < 1e-10);
    }

    /// Coarse-to-fine grid search over spherical coordinates.
    fn grid_search_s2(samples: &[SpherePoint], w: &[f64]) -> SpherePoint {
        let to_point = |th: f64, ph: f64| sp(&[th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
        let mut center = (PI / 2.0, PI);
        let mut half = (PI / 2.0, PI);
        for _ in 0..12 {
            let mut best = (f64::INFINITY, center);
            for i in 0..=60 {
                for j in 0..=60 {
                    let th = (center.0 - half.0 + 2.0 * half.0 * i as f64 / 60.0).clamp(0.0, PI);
                    let ph = center.1 - half.1 + 2.0 * half.1 * j as f64 / 60.0;
                    let val = objective(samples, w, &to_point(th, ph));
                    if val < best.0 {
                        best = (val, (th, ph));
                    }
                }
            }
            center = best.1;
            half = (half.0 / 6.0, half.1 / 6.0);
        }
        to_point(center.0, center.1)
    }

    #[test]
    fn symmetric_pair_gives_midpoint() {
        let a = sp(&[1.0, 1.0, 0.5]);
        let b = sp(&[1.0, -1.0, 0.5]);
        let (m, _, conv) = frechet_mean_sphere(
            &[a.clone(), b.clone()],
            &[1.0, 1.0],
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(conv);
        let midpoint = sp(&[1.0, 0.0, 0.5]);
        assert!((m.coords() - midpoint.coords()).norm() < 1e-9);
        let oracle = grid_search_s2(&[a, b], &[1.0, 1.0]);
        assert!((m.coords() - oracle.coords()).norm() < 1e-4);
    }

    #[test]
    fn spread_cluster_matches_grid_search_and_beats_samples() {
        let pts = vec![
            sp(&[1.0, 0.1, 0.2]),
            sp(&[0.6, 0.8, -0.1]),
            sp(&[0.7, -0.3, 0.6]),
            sp(&[0.2, 0.4, 0.9]),
        ];
        let w = [1.0, 2.0, 0.7, 1.3];
        let (m, _, conv) = frechet_mean_sphere(&pts, &w, &SolverConfig::default()).unwrap();
        assert!(conv);
        let oracle = grid_search_s2(&pts, &w);
        assert!((m.coords() - oracle.coords()).norm() < 1e-4);
        let best = objective(&pts, &w, &m);
        for p in &pts {
            assert!(best <= objective(&pts, &w, p) + 1e-9);
        }
    }

    #[test]
    fn nonconvergence_reports_k_max() {
        let pts = vec![
            sp(&[1.0, 0.0, 0.0]),
            sp(&[0.0, 1.0, 0.0]),
            sp(&[0.0, 0.0, 1.0]),
        ];
        let cfg = SolverConfig {
            eps_tol: 1e-300,
            k_max: 3,
            init: InitStrategy::FirstSample,
        };
        let (_, iters, conv) = frechet_mean_sphere(&pts, &[1.0, 1.0, 1.0], &cfg).unwrap();
        assert!(!conv);
        assert_eq!(iters, 3);
    }

    #[test]
    fn degenerate_weights() {
        let pts = vec![sp(&[1.0, 0.0]), sp(&[0.0, 1.0])];
        assert!(matches!(
            frechet_mean_sphere(&pts, &[1.0, -1.0], &SolverConfig::default()),
            Err(Error::DegenerateWeights { .. })
        ));
    }
}
