mod common;

use common::random_vector;
use ncg_core::cg::SpectrumBounds;
use ncg_core::linalg::{symmetric_extreme_eigenvalues, Matrix, Vector};
use ncg_core::oracles::{
    estimate_gradient_from, estimate_hessian_from, gradient_sample_size, hessian_sample_size, noisy_f_bounded,
    noisy_f_dynamic, subsampled_gradient, subsampled_hessian, BoundedNoise, DynamicNoise, EvalPoint,
    GradientEstimatorParams, GradientFailure, HessianEstimatorParams, NoiseLaw,
};
use ncg_core::problems::{make_logistic, make_quadratic, log_spaced, Dataset, Problem};
use ncg_core::rng::seeded;
use proptest::prelude::*;

#[test]
fn uniform_bounded_noise_mean_and_support() {
    let noise = BoundedNoise::new(1e-3, NoiseLaw::Uniform).unwrap();
    let mut rng = seeded(1);
    let draws: Vec<f64> = (0..100_000).map(|_| noise.sample_error(EvalPoint::Incumbent, &mut rng)).collect();
    assert!(draws.iter().all(|e| e.abs() <= 1e-3));
    let mean_abs = draws.iter().map(|e| e.abs()).sum::<f64>() / draws.len() as f64;
    assert!((mean_abs - 5e-4).abs() <= 0.02 * 5e-4, "mean |e| = {mean_abs}");
}

#[test]
fn noisy_values_stay_within_bounds() {
    let p = make_quadratic(5, &log_spaced(1.0, 4.0, 5), Vector::zeros(5), 2).unwrap();
    let x = random_vector(5, 3);
    let mut rng = seeded(4);
    for law in [NoiseLaw::Uniform, NoiseLaw::AdversarialSign, NoiseLaw::Constant] {
        let noise = BoundedNoise::new(0.01, law).unwrap();
        for _ in 0..1000 {
            let v = noisy_f_bounded(&p, &x, &noise, EvalPoint::Trial, &mut rng);
            assert!((v - p.value(&x)).abs() <= 0.01 * (1.0 + 1e-12));
        }
        let dn = DynamicNoise::new(0.02, law).unwrap();
        let allowance = dn.allowance(0.5, -3.0);
        assert!((allowance - 0.02 * 0.5 * 3.0).abs() < 1e-15);
        for _ in 0..1000 {
            let v = noisy_f_dynamic(&p, &x, allowance, law, EvalPoint::Incumbent, &mut rng).unwrap();
            assert!((v - p.value(&x)).abs() <= allowance * (1.0 + 1e-12));
        }
    }
}

#[test]
fn adversarial_sign_hurts_acceptance() {
    let mut rng = seeded(0);
    assert_eq!(NoiseLaw::AdversarialSign.draw(0.1, EvalPoint::Incumbent, &mut rng), -0.1);
    assert_eq!(NoiseLaw::AdversarialSign.draw(0.1, EvalPoint::Trial, &mut rng), 0.1);
}

#[test]
fn dynamic_noise_rejects_non_positive_allowance() {
    let dn = DynamicNoise::new(0.02, NoiseLaw::Uniform).unwrap();
    assert!(dn.sample_error(0.0, EvalPoint::Trial, &mut seeded(1)).is_err());
    assert!(DynamicNoise::new(0.0, NoiseLaw::Uniform).is_err());
}

#[test]
fn gradient_indicator_frequency() {
    let params = GradientEstimatorParams::new(0.2, GradientFailure::ScaledOpposite).unwrap();
    let true_grad = random_vector(10, 5);
    let mut rng = seeded(6);
    let trials = 10_000;
    let mut hits = 0;
    for _ in 0..trials {
        let est = estimate_gradient_from(&true_grad, 0.7, 0.3, &params, &mut rng);
        if est.indicator {
            hits += 1;
        }
        assert_eq!(est.indicator, est.accurate_branch);
    }
    let p = hits as f64 / trials as f64;
    let sigma = (0.8f64 * 0.2 / trials as f64).sqrt();
    assert!((p - 0.8).abs() <= 3.0 * sigma, "Pr(I) = {p}");
}

#[test]
fn random_large_failures_are_inaccurate() {
    let params = GradientEstimatorParams::new(1.0, GradientFailure::RandomLarge).unwrap();
    let true_grad = random_vector(6, 9);
    let mut rng = seeded(10);
    for _ in 0..500 {
        assert!(!estimate_gradient_from(&true_grad, 1.0, 0.5, &params, &mut rng).indicator);
    }
}

#[test]
fn hessian_estimates_respect_bounds_and_frequency() {
    let bounds = SpectrumBounds::new(1.0, 4.0).unwrap();
    let truth = Matrix::from_diagonal(&Vector::from_vec(log_spaced(1.0, 4.0, 8)));
    let params = HessianEstimatorParams::new(0.1, 1.0).unwrap();
    let mut rng = seeded(11);
    let trials = 10_000;
    let mut hits = 0;
    for _ in 0..trials {
        let est = estimate_hessian_from(&truth, bounds, 0.2, &params, &mut rng);
        assert_eq!(est.matrix, est.matrix.transpose());
        let (lo, hi) = symmetric_extreme_eigenvalues(&est.matrix);
        assert!(lo >= 1.0 - 1e-12 && hi <= 4.0 + 1e-12);
        if est.indicator {
            hits += 1;
        }
    }
    let p = hits as f64 / trials as f64;
    let sigma = (0.9f64 * 0.1 / trials as f64).sqrt();
    assert!(p >= 0.9 - 3.0 * sigma, "Pr(J) = {p}, sigma {sigma}");
}

fn logistic() -> ncg_core::problems::LogisticProblem {
    let d = Dataset::synthetic(200, 5, 13, true);
    make_logistic(&d.features, &d.labels, 1e-2).unwrap()
}

#[test]
fn subsampled_gradient_is_unbiased() {
    let p = logistic();
    let x = random_vector(5, 14);
    let truth = p.gradient(&x);
    let mut rng = seeded(15);
    let reps = 2000;
    let draws: Vec<Vector> = (0..reps).map(|_| subsampled_gradient(&p, &x, 20, &mut rng).unwrap()).collect();
    let mean = draws.iter().fold(Vector::zeros(5), |a, g| a + g) / reps as f64;
    for c in 0..5 {
        let var = draws.iter().map(|g| (g[c] - mean[c]).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        assert!((mean[c] - truth[c]).abs() <= 3.0 * se + 1e-15, "coordinate {c}");
    }
}

#[test]
fn subsampled_hessian_is_unbiased_along_directions() {
    let p = logistic();
    let x = random_vector(5, 16);
    let v = random_vector(5, 17);
    let truth = p.hess_vec(&x, &v);
    let mut rng = seeded(18);
    let reps = 2000;
    let draws: Vec<Vector> =
        (0..reps).map(|_| subsampled_hessian(&p, &x, 20, &mut rng).unwrap().apply(&v)).collect();
    let mean = draws.iter().fold(Vector::zeros(5), |a, g| a + g) / reps as f64;
    for c in 0..5 {
        let var = draws.iter().map(|g| (g[c] - mean[c]).powi(2)).sum::<f64>() / (reps - 1) as f64;
        assert!((mean[c] - truth[c]).abs() <= 3.0 * (var / reps as f64).sqrt() + 1e-15);
    }
    // the full sample reproduces the exact product
    let full = subsampled_hessian(&p, &x, 200, &mut rng).unwrap().apply(&v);
    assert!((full - truth).norm() <= 1e-14);
}

use ncg_core::linalg::LinearOperator;

proptest! {
    #[test]
    fn sample_sizes_clamped(kappa in 1e-3f64..1e3, gamma in 1e-3f64..1e3, delta in 0.01f64..0.99,
                            n in 1usize..100, pop in 1usize..100_000) {
        let s = gradient_sample_size(kappa, gamma, delta, n, pop);
        prop_assert!(s >= 1 && s <= pop);
        let s = hessian_sample_size(kappa, 1.0, gamma, delta, n, pop);
        prop_assert!(s >= 1 && s <= pop);
    }

    #[test]
    fn sample_sizes_monotone(kappa in 1e-2f64..10.0, gamma in 1e-3f64..1.0, delta in 0.01f64..0.5, n in 1usize..50) {
        let pop = usize::MAX / 2;
        prop_assert!(gradient_sample_size(kappa, gamma / 2.0, delta, n, pop) >= gradient_sample_size(kappa, gamma, delta, n, pop));
        prop_assert!(gradient_sample_size(kappa, gamma, delta / 2.0, n, pop) >= gradient_sample_size(kappa, gamma, delta, n, pop));
        prop_assert!(gradient_sample_size(kappa * 2.0, gamma, delta, n, pop) >= gradient_sample_size(kappa, gamma, delta, n, pop));
        prop_assert!(hessian_sample_size(kappa, 1.0, gamma / 2.0, delta, n, pop) >= hessian_sample_size(kappa, 1.0, gamma, delta, n, pop));
        prop_assert!(hessian_sample_size(kappa, 1.0, gamma, delta, n + 1, pop) >= hessian_sample_size(kappa, 1.0, gamma, delta, n, pop));
    }
}
