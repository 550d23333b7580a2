use frechet_core::metric::{isotonic_project, MetricSpace};
use frechet_core::{
    bures_wasserstein_sq, frechet_mean_quantile, frechet_mean_sphere, sphere_geodesic_sq,
    wasserstein_sq_quantile, DMatrix, DVector, GaussianPoint, ProbabilityGrid, QuantileFunction,
    SolverConfig, SpherePoint, SphereSpace,
};
use proptest::prelude::*;

const TOL: f64 = 1e-8;

fn quantile(m: usize) -> impl Strategy<Value = QuantileFunction> {
    prop::collection::vec(-5.0..5.0f64, m).prop_map(move |mut v| {
        v.sort_by(f64::total_cmp);
        QuantileFunction::new(ProbabilityGrid::new(m).unwrap(), v).unwrap()
    })
}

fn gaussian(d: usize) -> impl Strategy<Value = GaussianPoint> {
    (
        prop::collection::vec(-2.0..2.0f64, d),
        prop::collection::vec(-1.5..1.5f64, d * d),
    )
        .prop_map(move |(mu, a)| {
            let a = DMatrix::from_vec(d, d, a);
            GaussianPoint::new(DVector::from_vec(mu), &a * a.transpose()).unwrap()
        })
}

fn sphere(d: usize) -> impl Strategy<Value = SpherePoint> {
    prop::collection::vec(-1.0..1.0f64, d)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| SpherePoint::normalize(DVector::from_vec(v)).unwrap())
}

fn check_axioms(dab: f64, dba: f64, dac: f64, dbc: f64, daa: f64) -> Result<(), TestCaseError> {
    prop_assert!(dab >= 0.0);
    prop_assert!((dab - dba).abs() <= TOL, "symmetry {dab} vs {dba}");
    prop_assert!(daa.abs() <= TOL, "identity {daa}");
    prop_assert!(dac <= dab + dbc + TOL, "triangle {dac} > {dab} + {dbc}");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wasserstein_axioms(a in quantile(12), b in quantile(12), c in quantile(12)) {
        let d = |x: &QuantileFunction, y: &QuantileFunction| wasserstein_sq_quantile(x, y).unwrap().sqrt();
        check_axioms(d(&a, &b), d(&b, &a), d(&a, &c), d(&b, &c), d(&a, &a))?;
    }

    #[test]
    fn bures_axioms(a in gaussian(3), b in gaussian(3), c in gaussian(3)) {
        let d = |x: &GaussianPoint, y: &GaussianPoint| bures_wasserstein_sq(x, y).unwrap().sqrt();
        check_axioms(d(&a, &b), d(&b, &a), d(&a, &c), d(&b, &c), d(&a, &a))?;
    }

    #[test]
    fn geodesic_axioms(a in sphere(4), b in sphere(4), c in sphere(4)) {
        let d = |x: &SpherePoint, y: &SpherePoint| sphere_geodesic_sq(x, y).unwrap().sqrt();
        check_axioms(d(&a, &b), d(&b, &a), d(&a, &c), d(&b, &c), d(&a, &a))?;
    }

    #[test]
    fn bures_one_dimensional_closed_form(
        (m1, s1, m2, s2) in (-5.0..5.0f64, 0.0..3.0f64, -5.0..5.0f64, 0.0..3.0f64)
    ) {
        let p = GaussianPoint::univariate(m1, s1).unwrap();
        let q = GaussianPoint::univariate(m2, s2).unwrap();
        let want = (m1 - m2).powi(2) + (s1 - s2).powi(2);
        prop_assert!((bures_wasserstein_sq(&p, &q).unwrap() - want).abs() <= 1e-10);
    }

    #[test]
    fn isotonic_projection_is_idempotent(g in prop::collection::vec(-10.0..10.0f64, 2..40)) {
        let once = isotonic_project(&g).unwrap();
        let twice = isotonic_project(once.values()).unwrap();
        prop_assert_eq!(once.values(), twice.values());
        prop_assert!(once.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn equal_weight_quantile_mean_is_projected_average(
        samples in prop::collection::vec(quantile(8), 1..6),
        w in 0.1..10.0f64,
    ) {
        let weights = vec![w; samples.len()];
        let mean = frechet_mean_quantile(&samples, &weights).unwrap();
        let avg: Vec<f64> = (0..8)
            .map(|j| samples.iter().map(|s| s.values()[j]).sum::<f64>() / samples.len() as f64)
            .collect();
        let want = isotonic_project(&avg).unwrap();
        for (a, b) in mean.values().iter().zip(want.values()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn sphere_mean_beats_every_sample(
        samples in prop::collection::vec(sphere(3), 2..8),
        weights in prop::collection::vec(0.1..5.0f64, 8),
    ) {
        let w = &weights[..samples.len()];
        let cfg = SolverConfig::default();
        let (mean, _, _) = frechet_mean_sphere(&samples, w, &cfg).unwrap();
        let space = SphereSpace::new(3);
        let at_mean = space.objective(&samples, w, &mean).unwrap();
        for s in &samples {
            prop_assert!(at_mean <= space.objective(&samples, w, s).unwrap() + 1e-9);
        }
    }
}
