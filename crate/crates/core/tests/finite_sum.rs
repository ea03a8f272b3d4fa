mod common;

use common::random_vector;
use ncg_core::audit::{audit_trace, AuditContext, AuditMethod, GAMMA_EXIT, SAMPLE_RANGE};
use ncg_core::finite_sum::{gamma_loop, run_finite_sum, FiniteSumRunParams, SampleSizeRule};
use ncg_core::oracles::SubsamplingParams;
use ncg_core::problems::{make_logistic, Dataset, LogisticProblem, Problem};
use ncg_core::rng::seeded;
use ncg_core::solvers::{LinesearchParams, RunOptions, StopReason};
use ncg_core::{NcgError, Vector};

fn logistic(samples: usize, features: usize) -> LogisticProblem {
    let d = Dataset::synthetic(samples, features, 31, true);
    make_logistic(&d.features, &d.labels, 1e-2).unwrap()
}

fn sub(kappa_gamma: f64, gamma_0: f64) -> SubsamplingParams {
    SubsamplingParams { kappa_gamma, gamma_0, delta_g: 0.1, delta_h: 0.1, accuracy_constant: 1.0 }
}

#[test]
fn gamma_loop_exits_on_first_pass_when_target_is_loose() {
    let p = logistic(100, 4);
    let x = random_vector(4, 1) * 3.0;
    let g = p.gradient(&x);
    let target = 0.5 * 0.25 * g.norm();
    let r = gamma_loop(&p, &x, 0.5, 0.25, &sub(0.5, 0.5 * target), SampleSizeRule::Full, 10, &mut seeded(0)).unwrap();
    assert_eq!(r.loops, 1);
    assert_eq!(r.g, g);
    assert!(r.gamma_final <= target);
}

#[test]
fn gamma_loop_halves_until_exit() {
    let p = logistic(100, 4);
    let x = random_vector(4, 2) * 3.0;
    let target = 0.5 * 0.25 * p.gradient(&x).norm();
    let r = gamma_loop(&p, &x, 0.5, 0.25, &sub(0.5, 1.5 * target), SampleSizeRule::Full, 10, &mut seeded(0)).unwrap();
    assert_eq!(r.loops, 2);
    assert!((r.gamma_final - 0.75 * target).abs() <= 1e-15 * target);
    // the full gradient is computed once and reused across passes
    assert_eq!(r.component_gradients, 100);
}

#[test]
fn gamma_loop_gives_up_at_the_minimizer() {
    let p = logistic(50, 3);
    let x = p.minimizer().unwrap().clone();
    let mut params = sub(0.5, 1.0);
    params.gamma_0 = 1.0;
    let r = gamma_loop(&p, &x, 1.0, 0.25, &params, SampleSizeRule::Full, 5, &mut seeded(0));
    // the reference minimizer has a tiny nonzero gradient, far below 0.5^4
    assert!(matches!(r, Err(NcgError::GammaLoopExhausted(5))));
}

#[test]
fn bernstein_loop_meets_its_exit_condition() {
    let p = logistic(2000, 5);
    let x = random_vector(5, 3) * 2.0;
    let mut rng = seeded(4);
    for _ in 0..50 {
        let r = gamma_loop(&p, &x, 1.0, 0.25, &sub(0.5, 1.0), SampleSizeRule::Bernstein, 60, &mut rng).unwrap();
        assert!(r.gamma_final <= 0.25 * r.g.norm());
        assert!(r.sample_size >= 1 && r.sample_size <= 2000);
    }
}

#[test]
fn end_to_end_reaches_target_with_clean_audit() {
    let p = logistic(400, 6);
    let params = FiniteSumRunParams::new(LinesearchParams::default(), sub(0.5, 1.0));
    let ls = params.ls;
    for seed in 0..5 {
        let opts = RunOptions::new(Vector::zeros(6), 1e-6, 200, seed);
        let trace = run_finite_sum(&p, &params, &opts).unwrap();
        assert_eq!(trace.stop_reason, StopReason::HitEpsilon);
        let ctx = AuditContext {
            method: AuditMethod::FiniteSum { population: 400 },
            ls,
            bounds: p.bounds(),
            f_scale: p.min_value().unwrap().abs(),
        };
        let report = audit_trace(&trace, &ctx);
        assert!(report.is_clean(), "{:?}", report.violations);
        assert_eq!(report.tally(GAMMA_EXIT).checked, trace.records.len());
        assert_eq!(report.tally(SAMPLE_RANGE).checked, trace.records.len());
    }
}

#[test]
fn invalid_subsampling_parameters_are_rejected() {
    let p = logistic(20, 2);
    let opts = RunOptions::new(Vector::zeros(2), 1e-6, 10, 0);
    for bad in [sub(1.0, 1.0), sub(0.5, 0.0), SubsamplingParams { delta_g: 0.0, ..sub(0.5, 1.0) }] {
        let params = FiniteSumRunParams::new(LinesearchParams::default(), bad);
        assert!(run_finite_sum(&p, &params, &opts).is_err());
    }
}
