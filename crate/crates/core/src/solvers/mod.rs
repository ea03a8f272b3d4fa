//! Outer linesearch Newton-CG drivers for noisy function values.

mod engine;
mod params;
mod trace;

pub(crate) use engine::{run_engine, Acceptance, DerivativeDraw, DrawContext};
pub use engine::surrogate_threshold;
pub use params::{accept_test, accept_test_bounded, step_update, EtaSchedule, LinesearchParams};
pub use trace::{IterationRecord, NoiseRecord, SamplingRecord, StopReason, Trace, Variant};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{LinearOperator, Vector};
use crate::oracles::{
    estimate_gradient_from, estimate_hessian, BoundedNoise, DynamicNoise, GradientEstimatorParams,
    HessianEstimatorParams, NoiseLaw,
};
use crate::problems::Problem;
use crate::rng::{substream, Stream};

/// Where the gradient estimate comes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GradientSource {
    Exact,
    Probabilistic(GradientEstimatorParams),
}

/// Where the Hessian approximation comes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HessianSource {
    Exact,
    Probabilistic(HessianEstimatorParams),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop at the first `f(x_k) - f* <= epsilon` (testing mode).
    #[default]
    GroundTruth,
    /// Stop when `||g_k||` falls below the gradient-norm surrogate.
    GradientSurrogate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub x0: Vector,
    pub epsilon: f64,
    pub max_iters: usize,
    pub seed: u64,
    pub stop_rule: StopRule,
}

impl RunOptions {
    pub fn new(x0: Vector, epsilon: f64, max_iters: usize, seed: u64) -> Self {
        Self { x0, epsilon, max_iters, seed, stop_rule: StopRule::GroundTruth }
    }
}

fn draw_derivatives<'p, P: Problem + ?Sized>(
    problem: &'p P,
    gradient: GradientSource,
    hessian: HessianSource,
    x: &Vector,
    true_grad: &Vector,
    ctx: &DrawContext,
) -> Result<DerivativeDraw<'p>> {
    let k = ctx.k as u64;
    let g = match gradient {
        GradientSource::Exact => true_grad.clone(),
        GradientSource::Probabilistic(params) => {
            let mut rng = substream(ctx.seed, k, Stream::Gradient, 0);
            estimate_gradient_from(true_grad, ctx.t, ctx.eta, &params, &mut rng).g
        }
    };
    let (op, hessian_true): (Box<dyn LinearOperator + 'p>, _) = match hessian {
        HessianSource::Exact => (problem.hessian_operator(x), Some(true)),
        HessianSource::Probabilistic(params) => {
            let mut rng = substream(ctx.seed, k, Stream::Hessian, 0);
            let est = estimate_hessian(problem, x, ctx.eta, &params, &mut rng);
            (Box::new(est.matrix), Some(est.indicator))
        }
    };
    Ok(DerivativeDraw { g, hessian: op, hessian_true, sampling: None })
}

/// Linesearch Newton-CG with function values corrupted by noise of absolute
/// size at most `noise.epsilon_f`; the Armijo test is relaxed by
/// `2 epsilon_f`.
pub fn run_bounded<P: Problem + ?Sized>(
    problem: &P,
    noise: BoundedNoise,
    gradient: GradientSource,
    hessian: HessianSource,
    ls: &LinesearchParams,
    opts: &RunOptions,
) -> Result<Trace> {
    BoundedNoise::new(noise.epsilon_f, noise.law)?;
    run_engine(problem, Variant::Bounded, ls, Acceptance::Bounded(noise), opts, |x, g, ctx| {
        draw_derivatives(problem, gradient, hessian, x, g, ctx)
    })
}

/// Linesearch Newton-CG with function-value noise bounded by
/// `-theta t s'g` at both evaluation points and the classical Armijo test.
/// `theta = 0` means exact function values.
pub fn run_dynamic<P: Problem + ?Sized>(
    problem: &P,
    theta: f64,
    law: NoiseLaw,
    gradient: GradientSource,
    hessian: HessianSource,
    ls: &LinesearchParams,
    opts: &RunOptions,
) -> Result<Trace> {
    ls.validate_theta(theta)?;
    let acceptance = if theta == 0.0 { Acceptance::Exact } else { Acceptance::Dynamic(DynamicNoise::new(theta, law)?) };
    run_engine(problem, Variant::Dynamic, ls, acceptance, opts, |x, g, ctx| {
        draw_derivatives(problem, gradient, hessian, x, g, ctx)
    })
}
