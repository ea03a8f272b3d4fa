use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{random_unit_vector, Vector};
use crate::problems::Problem;

/// How the estimator misbehaves on its inaccurate branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientFailure {
    /// `g = -grad f`
    ScaledOpposite,
    /// `g = grad f + e` with `||e|| = 3 (1 + t eta) ||grad f||`
    RandomLarge,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimatorParams {
    pub delta_g: f64,
    pub failure_mode: GradientFailure,
}

impl GradientEstimatorParams {
    pub fn new(delta_g: f64, failure_mode: GradientFailure) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta_g) {
            return Err(invalid(format!("delta_g must lie in [0,1], got {delta_g}")));
        }
        Ok(Self { delta_g, failure_mode })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    pub g: Vector,
    /// Whether `||g - grad f|| <= t eta ||g||` holds for the returned `g`.
    pub indicator: bool,
    pub accurate_branch: bool,
}

/// Relative error used on the accurate branch. `tη/(1+tη)` is the largest
/// value for which `||e|| <= tη||g||` is guaranteed; it is shrunk by one part
/// in 10^12 so the re-derived indicator cannot flip on rounding.
pub fn accurate_scale(t: f64, eta: f64) -> f64 {
    let te = t * eta;
    te / (1.0 + te) * (1.0 - 1e-12)
}

pub fn gradient_is_accurate(g: &Vector, true_grad: &Vector, t: f64, eta: f64) -> bool {
    (g - true_grad).norm() <= t * eta * g.norm()
}

/// Estimator built around a known exact gradient.
pub fn estimate_gradient_from<R: Rng + ?Sized>(
    true_grad: &Vector,
    t: f64,
    eta: f64,
    params: &GradientEstimatorParams,
    rng: &mut R,
) -> GradientEstimate {
    let n = true_grad.len();
    let grad_norm = true_grad.norm();
    let accurate_branch = rng.random::<f64>() >= params.delta_g;
    let g = if accurate_branch {
        let dir = random_unit_vector(rng, n);
        true_grad + dir * (accurate_scale(t, eta) * grad_norm)
    } else {
        match params.failure_mode {
            GradientFailure::ScaledOpposite => -true_grad,
            GradientFailure::RandomLarge => {
                let dir = random_unit_vector(rng, n);
                true_grad + dir * (3.0 * (1.0 + t * eta) * grad_norm)
            }
        }
    };
    let indicator = gradient_is_accurate(&g, true_grad, t, eta);
    GradientEstimate { g, indicator, accurate_branch }
}

pub fn estimate_gradient<P: Problem + ?Sized, R: Rng + ?Sized>(
    problem: &P,
    x: &Vector,
    t: f64,
    eta: f64,
    params: &GradientEstimatorParams,
    rng: &mut R,
) -> GradientEstimate {
    estimate_gradient_from(&problem.gradient(x), t, eta, params, rng)
}
