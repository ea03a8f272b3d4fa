mod common;

use common::random_vector;
use ncg_core::audit::{audit_trace, AuditContext, AuditMethod};
use ncg_core::oracles::{BoundedNoise, GradientEstimatorParams, GradientFailure, HessianEstimatorParams, NoiseLaw};
use ncg_core::problems::{log_spaced, make_quadratic, Problem, QuadraticProblem};
use ncg_core::solvers::{
    accept_test, accept_test_bounded, run_bounded, run_dynamic, step_update, EtaSchedule, GradientSource,
    HessianSource, LinesearchParams, RunOptions, StopReason, StopRule,
};
use ncg_core::Vector;
use proptest::prelude::*;

fn quadratic(n: usize, seed: u64) -> QuadraticProblem {
    make_quadratic(n, &log_spaced(1.0, 4.0, n), random_vector(n, seed + 1), seed).unwrap()
}

fn offset_start(p: &QuadraticProblem, distance: f64, seed: u64) -> Vector {
    let d = random_vector(p.dim(), seed);
    p.minimizer().unwrap() + d.normalize() * distance
}

fn probabilistic() -> (GradientSource, HessianSource) {
    (
        GradientSource::Probabilistic(GradientEstimatorParams::new(0.1, GradientFailure::ScaledOpposite).unwrap()),
        HessianSource::Probabilistic(HessianEstimatorParams::new(0.1, 1.0).unwrap()),
    )
}

#[test]
fn exact_newton_step_lands_on_the_minimizer() {
    let p = quadratic(10, 3);
    let ls = LinesearchParams { eta_schedule: EtaSchedule::Fixed(1e-12), ..Default::default() };
    let opts = RunOptions::new(offset_start(&p, 5.0, 4), 1e-18, 1, 0);
    let trace = run_dynamic(&p, 0.0, NoiseLaw::Uniform, GradientSource::Exact, HessianSource::Exact, &ls, &opts).unwrap();
    assert!(trace.records[0].successful);
    assert!(trace.final_dist_to_min.unwrap() <= 1e-9);
    assert_eq!(trace.stop_reason, StopReason::HitEpsilon);
}

#[test]
fn bounded_noise_reaches_noise_region_and_stays() {
    let p = quadratic(8, 5);
    let eps_f = 1e-4;
    let noise = BoundedNoise::new(eps_f, NoiseLaw::AdversarialSign).unwrap();
    let (g, h) = probabilistic();
    let ls = LinesearchParams::default();
    let opts = RunOptions::new(offset_start(&p, 3.0, 6), 0.0, 200, 7);
    let trace = run_bounded(&p, noise, g, h, &ls, &opts).unwrap();
    // a zero gap (exact minimizer up to rounding) also counts as a hit
    assert!(matches!(trace.stop_reason, StopReason::MaxIters | StopReason::HitEpsilon));
    let gaps = trace.gaps();
    let entered = gaps.iter().position(|&gap| gap <= 10.0 * eps_f).expect("never reached the noise region");
    // successful steps can raise the gap by at most 4 eps_f
    for w in trace.records.windows(2).skip(entered) {
        assert!(w[1].gap <= w[0].gap + 4.0 * eps_f + 1e-15);
    }
    let ctx = AuditContext {
        method: AuditMethod::Bounded { epsilon_f: eps_f },
        ls,
        bounds: p.bounds(),
        f_scale: 0.0,
    };
    let report = audit_trace(&trace, &ctx);
    assert!(report.is_clean(), "{:?}", report.violations);
}

#[test]
fn dynamic_noise_keeps_accepted_gaps_monotone() {
    let p = quadratic(12, 8);
    let (g, h) = probabilistic();
    let ls = LinesearchParams::default();
    for seed in 0..20 {
        let opts = RunOptions::new(offset_start(&p, 10.0, seed), 1e-10, 500, seed);
        let trace = run_dynamic(&p, 0.04, NoiseLaw::AdversarialSign, g, h, &ls, &opts).unwrap();
        assert_eq!(trace.stop_reason, StopReason::HitEpsilon);
        let gaps = trace.gaps();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0]));
        assert!(trace.final_gap <= gaps[gaps.len() - 1]);
        let ctx = AuditContext { method: AuditMethod::Dynamic { theta: 0.04 }, ls, bounds: p.bounds(), f_scale: 0.0 };
        assert!(audit_trace(&trace, &ctx).is_clean());
    }
}

#[test]
fn dynamic_theta_bounds_are_enforced() {
    let p = quadratic(3, 1);
    let ls = LinesearchParams::default();
    let opts = RunOptions::new(Vector::zeros(3), 1e-6, 10, 0);
    let run = |theta| run_dynamic(&p, theta, NoiseLaw::Uniform, GradientSource::Exact, HessianSource::Exact, &ls, &opts);
    assert!(run(0.05).is_err());
    assert!(run(-0.01).is_err());
    assert!(run(0.049).is_ok());
}

#[test]
fn zero_gradient_stops_as_stationary() {
    let p = quadratic(4, 2);
    let x0 = p.minimizer().unwrap().clone();
    let ls = LinesearchParams::default();
    let opts = RunOptions { stop_rule: StopRule::GradientSurrogate, ..RunOptions::new(x0, 1e-6, 10, 0) };
    let noise = BoundedNoise::new(1e-3, NoiseLaw::Uniform).unwrap();
    let trace = run_bounded(&p, noise, GradientSource::Exact, HessianSource::Exact, &ls, &opts).unwrap();
    assert_eq!(trace.stop_reason, StopReason::Stationary);
    assert!(trace.records.is_empty());
}

#[test]
fn surrogate_stop_certifies_the_gap_on_true_iterations() {
    let p = quadratic(10, 9);
    let ls = LinesearchParams::default();
    for seed in 0..10 {
        let opts = RunOptions {
            stop_rule: StopRule::GradientSurrogate,
            ..RunOptions::new(offset_start(&p, 4.0, seed), 1e-8, 200, seed)
        };
        let trace = run_dynamic(&p, 0.0, NoiseLaw::Uniform, GradientSource::Exact, HessianSource::Exact, &ls, &opts)
            .unwrap();
        assert_eq!(trace.stop_reason, StopReason::GradientSurrogate);
        let last = trace.records.last().unwrap();
        assert!(last.true_iteration);
        assert!(last.gap <= 1e-8);
    }
}

#[test]
fn runs_are_reproducible() {
    let p = quadratic(6, 4);
    let (g, h) = probabilistic();
    let noise = BoundedNoise::new(1e-3, NoiseLaw::Uniform).unwrap();
    let ls = LinesearchParams::default();
    let opts = RunOptions::new(offset_start(&p, 2.0, 1), 1e-5, 100, 99);
    let a = run_bounded(&p, noise, g, h, &ls, &opts).unwrap();
    let b = run_bounded(&p, noise, g, h, &ls, &opts).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    let other = run_bounded(&p, noise, g, h, &ls, &RunOptions { seed: 100, ..opts.clone() }).unwrap();
    assert_ne!(a.to_json().unwrap(), other.to_json().unwrap());
}

#[test]
fn trace_exports() {
    let p = quadratic(5, 2);
    let ls = LinesearchParams::default();
    let opts = RunOptions::new(offset_start(&p, 2.0, 3), 1e-10, 50, 1);
    let (g, h) = probabilistic();
    let trace = run_dynamic(&p, 0.01, NoiseLaw::Uniform, g, h, &ls, &opts).unwrap();
    let json: serde_json::Value = serde_json::from_str(&trace.to_json().unwrap()).unwrap();
    assert_eq!(json["records"].as_array().unwrap().len(), trace.records.len());
    let mut csv = Vec::new();
    trace.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), trace.records.len() + 1);
}

#[test]
fn dimension_mismatch_is_reported() {
    let p = quadratic(4, 1);
    let opts = RunOptions::new(Vector::zeros(3), 1e-6, 10, 0);
    let r = run_dynamic(&p, 0.0, NoiseLaw::Uniform, GradientSource::Exact, HessianSource::Exact, &Default::default(), &opts);
    assert!(matches!(r, Err(ncg_core::NcgError::DimensionMismatch { .. })));
}

proptest! {
    #[test]
    fn steplength_stays_on_grid(outcomes in proptest::collection::vec(any::<bool>(), 1..60)) {
        let (tau, t_max) = (0.5, 1.0);
        let mut t = t_max;
        for s in outcomes {
            t = step_update(t, s, tau, t_max);
            prop_assert!(t > 0.0 && t <= t_max);
            let j = (t.ln() / tau.ln()).round();
            prop_assert!((t - tau.powf(j)).abs() <= 1e-15 * t);
        }
    }

    #[test]
    fn relaxed_test_matches_armijo_without_noise(f in -1e3f64..1e3, df in -10.0f64..10.0, t in 1e-3f64..1.0, slope in -10.0f64..-1e-6) {
        prop_assert_eq!(accept_test_bounded(f, f + df, 0.1, t, slope, 0.0), accept_test(f, f + df, 0.1, t, slope));
        // relaxation only ever widens acceptance
        if accept_test(f, f + df, 0.1, t, slope) {
            prop_assert!(accept_test_bounded(f, f + df, 0.1, t, slope, 1e-3));
        }
    }

    #[test]
    fn random_bounded_runs_pass_the_audit(seed in 0u64..1000, eps_f in 1e-6f64..1e-2, delta in 0.0f64..0.3) {
        let p = quadratic(6, seed);
        let g = GradientSource::Probabilistic(GradientEstimatorParams::new(delta, GradientFailure::RandomLarge).unwrap());
        let h = HessianSource::Probabilistic(HessianEstimatorParams::new(delta, 0.5).unwrap());
        let noise = BoundedNoise::new(eps_f, NoiseLaw::Uniform).unwrap();
        let ls = LinesearchParams::default();
        let opts = RunOptions::new(offset_start(&p, 5.0, seed), 0.0, 60, seed);
        let trace = run_bounded(&p, noise, g, h, &ls, &opts).unwrap();
        let ctx = AuditContext { method: AuditMethod::Bounded { epsilon_f: eps_f }, ls, bounds: p.bounds(), f_scale: 0.0 };
        let report = audit_trace(&trace, &ctx);
        prop_assert!(report.is_clean(), "{:?}", report.violations);
    }
}
