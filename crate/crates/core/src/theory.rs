//! Closed-form constants and expected hitting-time bounds.
//!
//! All formulas use the worst-case step constants
//! `kappa1 = (1 - eta_bar)/lambda_n`, `kappa2 = 1/lambda_1`,
//! `beta = lambda_1`.

use serde::{Deserialize, Serialize};

use crate::cg::{SpectrumBounds, StepConstants};
use crate::error::{invalid, Result};

/// Largest steplength for which a true iteration of the bounded-noise
/// method is guaranteed to pass the relaxed Armijo test.
pub fn t_bar_bounded(c: f64, eta_bar: f64, bounds: SpectrumBounds) -> f64 {
    let k = StepConstants::worst_case(bounds, eta_bar);
    2.0 * k.beta * k.kappa1 * (1.0 - c) / (k.kappa1 * bounds.lambda_n + 2.0)
}

/// Same threshold for the dynamic-noise method.
pub fn t_bar_dynamic(c: f64, theta: f64, eta_bar: f64, bounds: SpectrumBounds) -> Result<f64> {
    let slack = 1.0 - c - 2.0 * theta;
    if !(slack > 0.0) {
        return Err(invalid(format!("1 - c - 2 theta must be positive, got {slack}")));
    }
    if !(theta >= 0.0 && theta < 0.5 * c) {
        return Err(invalid(format!("theta must lie in [0, c/2), got {theta}")));
    }
    let k = StepConstants::worst_case(bounds, eta_bar);
    Ok(2.0 * k.kappa1 * k.beta * slack / (k.kappa1 * bounds.lambda_n + 2.0))
}

/// Which method a progress model describes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ProgressVariant {
    Bounded { c: f64 },
    Dynamic { c: f64, theta: f64 },
}

/// Guaranteed per-iteration progress `h(t)` of `z_k` on true successful
/// iterations and the noise penalty `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgressModel {
    pub variant: ProgressVariant,
    pub constants: StepConstants,
    pub lambda_1: f64,
    pub t_max: f64,
}

impl ProgressModel {
    pub fn new(variant: ProgressVariant, bounds: SpectrumBounds, eta_bar: f64, t_max: f64) -> Self {
        Self { variant, constants: StepConstants::worst_case(bounds, eta_bar), lambda_1: bounds.lambda_1, t_max }
    }

    /// Coefficient `a` in `h(t) = -log(1 - a t)`.
    pub fn rate(&self) -> f64 {
        let k = &self.constants;
        let base = k.beta * k.kappa1 * k.kappa1 * self.lambda_1 / ((1.0 + self.t_max) * (1.0 + self.t_max));
        match self.variant {
            ProgressVariant::Bounded { c } => c * base,
            ProgressVariant::Dynamic { c, theta } => 2.0 * (c - 2.0 * theta) * base,
        }
    }

    pub fn h(&self, t: f64) -> Result<f64> {
        let arg = 1.0 - self.rate() * t;
        if !(arg > 0.0) {
            return Err(invalid(format!("h(t) undefined: 1 - a t = {arg}")));
        }
        Ok(-arg.ln())
    }

    /// `log(1 + 4 eps_f / eps)` for bounded noise, zero for dynamic noise.
    pub fn r(&self, epsilon_f: f64, epsilon: f64) -> Result<f64> {
        match self.variant {
            ProgressVariant::Dynamic { .. } => Ok(0.0),
            ProgressVariant::Bounded { .. } => {
                if !(epsilon > 0.0) {
                    return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
                }
                Ok((4.0 * epsilon_f / epsilon).ln_1p())
            }
        }
    }

    /// `M = a t_bar`, so that `1 - M = exp(-h(t_bar))`.
    pub fn m(&self, t_bar: f64) -> f64 {
        self.rate() * t_bar
    }
}

/// `h(t)` and `r` for the given variant; see [`ProgressModel`].
pub fn h_and_r(t: f64, epsilon_f: f64, epsilon: f64, model: &ProgressModel) -> Result<(f64, f64)> {
    Ok((model.h(t)?, model.r(epsilon_f, epsilon)?))
}

/// Smallest admissible target `4 eps_f / ((1 - M)^(-gamma) - 1)` for the
/// bounded-noise method.
pub fn epsilon_threshold(epsilon_f: f64, m: f64, gamma: f64) -> Result<f64> {
    if !(m > 0.0 && m < 1.0) {
        return Err(invalid(format!("M must lie in (0,1), got {m}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("gamma must lie in (0,1), got {gamma}")));
    }
    // (1-M)^(-gamma) - 1 computed without cancellation.
    let denom = (-gamma * (-m).ln_1p()).exp_m1();
    Ok(4.0 * epsilon_f / denom)
}

/// `log(gap_0 / epsilon)`, the largest progress measure before the target is
/// hit.
pub fn z_epsilon(initial_gap: f64, epsilon: f64) -> f64 {
    (initial_gap / epsilon).ln()
}

fn log_base(base: f64, x: f64) -> f64 {
    x.ln() / base.ln()
}

/// Expected hitting-time bound for the bounded-noise method.
pub fn expected_bound_bounded(
    delta_g: f64,
    gamma: f64,
    m: f64,
    z_eps: f64,
    tau: f64,
    t_bar: f64,
    t0: f64,
) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(invalid(format!("gamma must lie in (0,1), got {gamma}")));
    }
    if !(delta_g >= 0.0 && delta_g < 0.5 - 0.5 * gamma.sqrt()) {
        return Err(invalid(format!(
            "delta_g = {delta_g} must be below 1/2 - sqrt(gamma)/2 = {}",
            0.5 - 0.5 * gamma.sqrt()
        )));
    }
    let denom = (1.0 - 2.0 * delta_g).powi(2) - gamma;
    if !(denom > 0.0) {
        return Err(invalid(format!("(1 - 2 delta_g)^2 - gamma = {denom} must be positive")));
    }
    check_m(m)?;
    let factor = 2.0 * (1.0 - delta_g) / denom;
    let progress = 2.0 * z_eps / -(-m).ln_1p();
    Ok(factor * (progress + (1.0 - gamma) * log_base(tau, t_bar / t0)))
}

/// Expected hitting-time bound for the dynamic-noise method.
pub fn expected_bound_dynamic(delta_g: f64, m: f64, z_eps: f64, tau: f64, t_bar: f64, t0: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&delta_g) {
        return Err(invalid(format!("delta_g must lie in [0, 1/2), got {delta_g}")));
    }
    check_m(m)?;
    let factor = 2.0 * (1.0 - delta_g) / (1.0 - 2.0 * delta_g).powi(2);
    let progress = 2.0 * z_eps / -(-m).ln_1p();
    Ok(factor * (progress + log_base(tau, t_bar / t0)))
}

fn check_m(m: f64) -> Result<()> {
    if m > 0.0 && m < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("M must lie in (0,1), got {m}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalConvergenceParams {
    /// Hessian Lipschitz constant.
    pub l_h: f64,
    /// Hessian accuracy constant.
    pub c: f64,
    /// Target contraction factor, below one.
    pub c_tilde: f64,
    /// Probability that both estimates are accurate, `(1-delta_g)(1-delta_h)`.
    pub p: f64,
}

/// `(1/lambda_1) (L_H/2 ||x - x*|| + C eta + 2 lambda_n eta / (1 - eta_bar))`;
/// a unit step from `x` contracts the distance to `x*` by this factor when
/// both estimates are accurate.
pub fn local_contraction_factor(
    distance: f64,
    eta: f64,
    params: &LocalConvergenceParams,
    bounds: SpectrumBounds,
    eta_bar: f64,
) -> f64 {
    (0.5 * params.l_h * distance + params.c * eta + 2.0 * bounds.lambda_n * eta / (1.0 - eta_bar)) / bounds.lambda_1
}

/// Every constant the bounds depend on, for one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub kappa1: f64,
    pub kappa2: f64,
    pub beta: f64,
    pub t_bar: f64,
    pub m: f64,
    pub h_of_tbar: f64,
    /// Zero for the dynamic method.
    pub r_of_epsf: f64,
    /// `r / h(t_bar)`, the smallest valid gamma (bounded method only).
    pub gamma_effective: Option<f64>,
    /// Requested gamma used in the bound (bounded method only).
    pub gamma: Option<f64>,
    pub epsilon_threshold: Option<f64>,
}

impl TheoryConstants {
    /// Constants for the bounded-noise method. Fails if `r/h(t_bar)` exceeds
    /// the requested `gamma`.
    pub fn bounded(
        c: f64,
        eta_bar: f64,
        t_max: f64,
        bounds: SpectrumBounds,
        epsilon_f: f64,
        epsilon: f64,
        gamma: f64,
    ) -> Result<Self> {
        let t_bar = t_bar_bounded(c, eta_bar, bounds);
        let model = ProgressModel::new(ProgressVariant::Bounded { c }, bounds, eta_bar, t_max);
        let (h, r) = h_and_r(t_bar, epsilon_f, epsilon, &model)?;
        let m = model.m(t_bar);
        let effective = r / h;
        if !(effective <= gamma) {
            return Err(invalid(format!(
                "r(eps_f)/h(t_bar) = {effective} exceeds gamma = {gamma}; raise epsilon above the threshold"
            )));
        }
        let k = model.constants;
        Ok(Self {
            kappa1: k.kappa1,
            kappa2: k.kappa2,
            beta: k.beta,
            t_bar,
            m,
            h_of_tbar: h,
            r_of_epsf: r,
            gamma_effective: Some(effective),
            gamma: Some(gamma),
            epsilon_threshold: Some(epsilon_threshold(epsilon_f, m, gamma)?),
        })
    }

    pub fn dynamic(c: f64, theta: f64, eta_bar: f64, t_max: f64, bounds: SpectrumBounds) -> Result<Self> {
        let t_bar = t_bar_dynamic(c, theta, eta_bar, bounds)?;
        let model = ProgressModel::new(ProgressVariant::Dynamic { c, theta }, bounds, eta_bar, t_max);
        let k = model.constants;
        Ok(Self {
            kappa1: k.kappa1,
            kappa2: k.kappa2,
            beta: k.beta,
            t_bar,
            m: model.m(t_bar),
            h_of_tbar: model.h(t_bar)?,
            r_of_epsf: 0.0,
            gamma_effective: None,
            gamma: None,
            epsilon_threshold: None,
        })
    }
}
