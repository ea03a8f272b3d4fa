//! Newton-CG for finite sums: exact function values, subsampled gradients
//! whose sample size is raised until the target accuracy is compatible with
//! the gradient norm, and independently subsampled Hessians.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, NcgError, Result};
use crate::linalg::{symmetric_spectral_norm, LinearOperator, Matrix, Vector};
use crate::oracles::{draw_indices, gradient_sample_size, hessian_sample_size, SubsamplingParams};
use crate::problems::FiniteSum;
use crate::rng::{substream, Stream};
use crate::solvers::{run_engine, Acceptance, DerivativeDraw, LinesearchParams, RunOptions, SamplingRecord, Trace, Variant};

pub const DEFAULT_MAX_GAMMA_LOOPS: usize = 60;

/// Above this dimension the Hessian accuracy indicator is not evaluated.
const HESSIAN_CHECK_MAX_DIM: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SampleSizeRule {
    /// Matrix Bernstein sample sizes.
    #[default]
    Bernstein,
    /// Always use every component.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSumRunParams {
    pub ls: LinesearchParams,
    pub sub: SubsamplingParams,
    pub max_gamma_loops: usize,
    pub sampling: SampleSizeRule,
}

impl FiniteSumRunParams {
    pub fn new(ls: LinesearchParams, sub: SubsamplingParams) -> Self {
        Self { ls, sub, max_gamma_loops: DEFAULT_MAX_GAMMA_LOOPS, sampling: SampleSizeRule::Bernstein }
    }

    pub fn validate(&self) -> Result<()> {
        self.ls.validate()?;
        self.sub.validate()?;
        if self.max_gamma_loops == 0 {
            return Err(invalid("max_gamma_loops must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaLoopResult {
    pub g: Vector,
    pub gamma_final: f64,
    pub loops: usize,
    pub sample_size: usize,
    pub component_gradients: usize,
}

/// Draws subsampled gradients with target accuracies
/// `gamma_0, gamma_0 kappa_gamma, ...` until the target satisfies
/// `gamma <= t eta ||g||`. Each pass draws a fresh index set.
#[allow(clippy::too_many_arguments)]
pub fn gamma_loop<F: FiniteSum + ?Sized, R: Rng + ?Sized>(
    fsp: &F,
    x: &Vector,
    t: f64,
    eta: f64,
    sub: &SubsamplingParams,
    rule: SampleSizeRule,
    max_loops: usize,
    rng: &mut R,
) -> Result<GammaLoopResult> {
    if !(t * eta > 0.0) {
        return Err(invalid(format!("t * eta must be positive, got {}", t * eta)));
    }
    let population = fsp.num_components();
    let n = fsp.dim();
    let kappa_fg = fsp.component_grad_bound(x);
    let mut full: Option<Vector> = None;
    let mut evaluated = 0;
    for pass in 0..max_loops {
        let gamma = sub.gamma(pass);
        let (g, size) = match rule {
            SampleSizeRule::Full => {
                if full.is_none() {
                    let all: Vec<usize> = (0..population).collect();
                    full = Some(fsp.subset_gradient(x, &all));
                    evaluated += population;
                }
                (full.clone().unwrap(), population)
            }
            SampleSizeRule::Bernstein => {
                let size = gradient_sample_size(kappa_fg, gamma, sub.delta_g, n, population);
                let idx = draw_indices(population, size, rng)?;
                evaluated += size;
                (fsp.subset_gradient(x, &idx), size)
            }
        };
        if gamma <= t * eta * g.norm() {
            return Ok(GammaLoopResult { g, gamma_final: gamma, loops: pass + 1, sample_size: size, component_gradients: evaluated });
        }
    }
    Err(NcgError::GammaLoopExhausted(max_loops))
}

fn dense_from_operator(op: &dyn LinearOperator) -> Matrix {
    let n = op.dim();
    let mut m = Matrix::zeros(n, n);
    for j in 0..n {
        let mut e = Vector::zeros(n);
        e[j] = 1.0;
        m.set_column(j, &op.apply(&e));
    }
    m
}

/// Runs the finite-sum method from `opts.x0`. Function values are exact.
pub fn run_finite_sum<F: FiniteSum + ?Sized>(fsp: &F, params: &FiniteSumRunParams, opts: &RunOptions) -> Result<Trace> {
    params.validate()?;
    let sub = params.sub;
    let population = fsp.num_components();
    let n = fsp.dim();
    run_engine(fsp, Variant::FiniteSum, &params.ls, Acceptance::Exact, opts, |x, _true_grad, ctx| {
        let k = ctx.k as u64;
        let mut g_rng = substream(ctx.seed, k, Stream::GradientSample, 0);
        let loop_result =
            gamma_loop(fsp, x, ctx.t, ctx.eta, &sub, params.sampling, params.max_gamma_loops, &mut g_rng)?;
        let h_size = match params.sampling {
            SampleSizeRule::Full => population,
            SampleSizeRule::Bernstein => hessian_sample_size(
                fsp.component_hess_bound(x),
                sub.accuracy_constant,
                ctx.eta,
                sub.delta_h,
                n,
                population,
            ),
        };
        let mut h_rng = substream(ctx.seed, k, Stream::HessianSample, 0);
        let idx = draw_indices(population, h_size, &mut h_rng)?;
        let hessian = fsp.subset_hessian(x, &idx);
        let hessian_true = (n <= HESSIAN_CHECK_MAX_DIM).then(|| {
            let err = symmetric_spectral_norm(&(dense_from_operator(hessian.as_ref()) - fsp.hessian(x)));
            err <= sub.accuracy_constant * ctx.eta
        });
        Ok(DerivativeDraw {
            g: loop_result.g,
            hessian,
            hessian_true,
            sampling: Some(SamplingRecord {
                gradient_sample: loop_result.sample_size,
                hessian_sample: h_size,
                gamma_loops: loop_result.loops,
                gamma_final: loop_result.gamma_final,
                component_gradients: loop_result.component_gradients,
            }),
        })
    })
}
