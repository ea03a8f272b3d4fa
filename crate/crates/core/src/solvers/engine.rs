//! The iteration loop shared by all three drivers. A driver supplies the
//! derivative draw for the current iterate and the acceptance rule; the loop
//! handles forcing terms, CG, the steplength update, stopping and recording.

use crate::cg::truncated_cg;
use crate::error::{NcgError, Result};
use crate::linalg::{all_finite, LinearOperator, Vector};
use crate::oracles::{gradient_is_accurate, BoundedNoise, DynamicNoise, EvalPoint};
use crate::problems::{gap_from_value, Problem};
use crate::rng::{substream, Stream};

use super::params::{accept_test, accept_test_bounded, step_update, LinesearchParams};
use super::trace::{IterationRecord, NoiseRecord, SamplingRecord, StopReason, Trace, Variant};
use super::{RunOptions, StopRule};

pub(crate) enum Acceptance {
    Bounded(BoundedNoise),
    Dynamic(DynamicNoise),
    Exact,
}

pub(crate) struct DrawContext {
    pub k: usize,
    pub t: f64,
    pub eta: f64,
    pub seed: u64,
}

pub(crate) struct DerivativeDraw<'a> {
    pub g: Vector,
    pub hessian: Box<dyn LinearOperator + 'a>,
    pub hessian_true: Option<bool>,
    pub sampling: Option<SamplingRecord>,
}

/// Gradient-norm threshold that certifies `gap <= epsilon` on a true
/// iteration: `||grad f|| <= (1 + t eta)||g||` and `gap <= ||grad f||^2/(2 lambda_1)`.
pub fn surrogate_threshold(lambda_1: f64, epsilon: f64, t_max: f64, eta_bar: f64) -> f64 {
    lambda_1 * (2.0 * epsilon / lambda_1).sqrt() / (1.0 + t_max * eta_bar)
}

struct State {
    records: Vec<IterationRecord>,
    x: Vector,
    t: f64,
    f: f64,
    gap: f64,
}

pub(crate) fn run_engine<'p, P, D>(
    problem: &'p P,
    variant: Variant,
    ls: &LinesearchParams,
    acceptance: Acceptance,
    opts: &RunOptions,
    mut draw: D,
) -> Result<Trace>
where
    P: Problem + ?Sized,
    D: FnMut(&Vector, &Vector, &DrawContext) -> Result<DerivativeDraw<'p>>,
{
    ls.validate()?;
    if opts.x0.len() != problem.dim() {
        return Err(NcgError::DimensionMismatch { expected: problem.dim(), got: opts.x0.len() });
    }
    if !(opts.epsilon >= 0.0) {
        return Err(crate::error::invalid(format!("epsilon must be non-negative, got {}", opts.epsilon)));
    }
    let f_star = problem.min_value().ok_or(NcgError::MissingReference)?;
    let x_star = problem.minimizer().cloned();
    let dist = |x: &Vector| x_star.as_ref().map(|xs| (x - xs).norm());

    let f0 = problem.value(&opts.x0);
    let initial_gap = gap_from_value(f0, f_star)?;
    let threshold = surrogate_threshold(problem.bounds().lambda_1, opts.epsilon, ls.t_max, ls.eta_bar);

    let mut st = State { records: Vec::new(), x: opts.x0.clone(), t: ls.t0, f: f0, gap: initial_gap };
    let mut surrogate_hit = None;
    let mut previous_grad_norm = None;
    let mut failure = None;

    let stop_reason = 'outer: {
        for k in 0..opts.max_iters {
            if opts.stop_rule == StopRule::GroundTruth && st.gap <= opts.epsilon {
                break 'outer StopReason::HitEpsilon;
            }
            let eta = ls.eta_schedule.value(k, previous_grad_norm, ls.eta_bar);
            let ctx = DrawContext { k, t: st.t, eta, seed: opts.seed };
            match iterate(problem, ls, &acceptance, &mut draw, &ctx, f_star, &dist, initial_gap, &mut st) {
                Ok(Step::Continue { grad_norm }) => {
                    previous_grad_norm = Some(grad_norm);
                    if surrogate_hit.is_none() && grad_norm <= threshold {
                        surrogate_hit = Some(k);
                        if opts.stop_rule == StopRule::GradientSurrogate {
                            break 'outer StopReason::GradientSurrogate;
                        }
                    }
                }
                Ok(Step::Stationary) => break 'outer StopReason::Stationary,
                Err(e) => {
                    failure = Some(e.to_string());
                    break 'outer StopReason::NumericalFailure;
                }
            }
        }
        if opts.stop_rule == StopRule::GroundTruth && st.gap <= opts.epsilon {
            StopReason::HitEpsilon
        } else {
            StopReason::MaxIters
        }
    };

    Ok(Trace {
        variant,
        seed: opts.seed,
        epsilon: opts.epsilon,
        initial_gap,
        final_dist_to_min: dist(&st.x),
        final_x: st.x.iter().copied().collect(),
        final_gap: st.gap,
        records: st.records,
        stop_reason,
        surrogate_hit,
        failure,
    })
}

enum Step {
    Continue { grad_norm: f64 },
    Stationary,
}

#[allow(clippy::too_many_arguments)]
fn iterate<'p, P, D>(
    problem: &'p P,
    ls: &LinesearchParams,
    acceptance: &Acceptance,
    draw: &mut D,
    ctx: &DrawContext,
    f_star: f64,
    dist: &dyn Fn(&Vector) -> Option<f64>,
    initial_gap: f64,
    st: &mut State,
) -> Result<Step>
where
    P: Problem + ?Sized,
    D: FnMut(&Vector, &Vector, &DrawContext) -> Result<DerivativeDraw<'p>>,
{
    let (k, t, eta) = (ctx.k, ctx.t, ctx.eta);
    let true_grad = problem.gradient(&st.x);
    if !all_finite(&true_grad) {
        return Err(NcgError::NonFinite("gradient"));
    }
    let d = draw(&st.x, &true_grad, ctx)?;
    if !all_finite(&d.g) {
        return Err(NcgError::NonFinite("gradient estimate"));
    }
    let grad_norm = d.g.norm();
    if grad_norm == 0.0 {
        return Ok(Step::Stationary);
    }
    let cg = truncated_cg(d.hessian.as_ref(), &d.g, eta, None)?;
    let slope = cg.step.dot(&d.g);
    let trial = &st.x + &cg.step * t;
    let f_trial = problem.value(&trial);
    if !f_trial.is_finite() {
        return Err(NcgError::NonFinite("trial function value"));
    }

    let (successful, noise) = match acceptance {
        Acceptance::Exact => (accept_test(st.f, f_trial, ls.c, t, slope), None),
        Acceptance::Bounded(noise) => {
            let e_inc = noise.sample_error(EvalPoint::Incumbent, &mut substream(ctx.seed, k as u64, Stream::IncumbentNoise, 0));
            let e_trial = noise.sample_error(EvalPoint::Trial, &mut substream(ctx.seed, k as u64, Stream::TrialNoise, 0));
            let ok = accept_test_bounded(st.f + e_inc, f_trial + e_trial, ls.c, t, slope, noise.epsilon_f);
            (ok, Some(NoiseRecord { incumbent_error: e_inc, trial_error: e_trial, bound: noise.epsilon_f }))
        }
        Acceptance::Dynamic(noise) => {
            let allowance = noise.allowance(t, slope);
            let e_inc =
                noise.sample_error(allowance, EvalPoint::Incumbent, &mut substream(ctx.seed, k as u64, Stream::IncumbentNoise, 0))?;
            let e_trial =
                noise.sample_error(allowance, EvalPoint::Trial, &mut substream(ctx.seed, k as u64, Stream::TrialNoise, 0))?;
            let ok = accept_test(st.f + e_inc, f_trial + e_trial, ls.c, t, slope);
            (ok, Some(NoiseRecord { incumbent_error: e_inc, trial_error: e_trial, bound: allowance }))
        }
    };

    let z = if st.gap > 0.0 && initial_gap > 0.0 { Some((initial_gap / st.gap).ln()) } else { None };
    st.records.push(IterationRecord {
        k,
        t,
        eta,
        successful,
        true_iteration: gradient_is_accurate(&d.g, &true_grad, t, eta),
        hessian_true: d.hessian_true,
        cg_iters: cg.iterations,
        gap: st.gap,
        z,
        grad_norm_true: true_grad.norm(),
        grad_norm,
        step_norm: cg.step.norm(),
        slope,
        dist_to_min: dist(&st.x),
        noise,
        sampling: d.sampling,
    });

    if successful {
        st.gap = gap_from_value(f_trial, f_star)?;
        st.f = f_trial;
        st.x = trial;
    }
    st.t = step_update(t, successful, ls.tau, ls.t_max);
    Ok(Step::Continue { grad_norm })
}
