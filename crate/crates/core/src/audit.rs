//! Post-hoc checks of the per-iteration inequalities the convergence
//! analysis relies on, evaluated on recorded traces with ground-truth gaps.
//!
//! Implications between flags (a true iteration with a small enough
//! steplength must be successful) are checked exactly. Inequalities between
//! floating-point gaps get a rounding allowance of
//! `1e-10 (|lhs| + |rhs|) + 4 eps |f*|`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cg::{SpectrumBounds, StepConstants};
use crate::solvers::{LinesearchParams, StopReason, Trace};
use crate::theory::{t_bar_bounded, t_bar_dynamic};

pub const STEP_RANGE: &str = "step_range";
pub const ETA_RANGE: &str = "eta_range";
pub const TRUE_GRADIENT_CONSISTENCY: &str = "true_gradient_consistency";
pub const CG_DESCENT: &str = "cg_descent";
pub const TRUE_SMALL_STEP_SUCCEEDS: &str = "true_small_step_succeeds";
pub const UNSUCCESSFUL_UNCHANGED: &str = "unsuccessful_unchanged";
pub const NOISE_WITHIN_BOUND: &str = "noise_within_bound";
pub const BOUNDED_SUCCESSFUL_DECREASE: &str = "bounded_successful_decrease";
pub const BOUNDED_TRUE_CONTRACTION: &str = "bounded_true_contraction";
pub const BOUNDED_TRUE_Z_GAIN: &str = "bounded_true_z_gain";
pub const BOUNDED_FALSE_Z_LOSS: &str = "bounded_false_z_loss";
pub const DYNAMIC_SUCCESSFUL_DECREASE: &str = "dynamic_successful_decrease";
pub const DYNAMIC_MONOTONE: &str = "dynamic_monotone";
pub const DYNAMIC_TRUE_Z_GAIN: &str = "dynamic_true_z_gain";
pub const GAMMA_EXIT: &str = "gamma_exit";
pub const SAMPLE_RANGE: &str = "sample_range";

/// Which method produced the trace, with the parameters the checks need.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum AuditMethod {
    Bounded { epsilon_f: f64 },
    /// `theta = 0` means exact function values.
    Dynamic { theta: f64 },
    FiniteSum { population: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditContext {
    pub method: AuditMethod,
    pub ls: LinesearchParams,
    pub bounds: SpectrumBounds,
    /// `|f*|`, sets the absolute rounding allowance.
    pub f_scale: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckTally {
    pub checked: usize,
    pub violated: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub seed: u64,
    pub k: usize,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub tallies: BTreeMap<String, CheckTally>,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn tally(&self, check: &str) -> CheckTally {
        self.tallies.get(check).copied().unwrap_or_default()
    }

    pub fn merge(&mut self, other: AuditReport) {
        for (name, t) in other.tallies {
            let e = self.tallies.entry(name).or_default();
            e.checked += t.checked;
            e.violated += t.violated;
        }
        self.violations.extend(other.violations);
    }

    fn record(&mut self, check: &str, seed: u64, k: usize, ok: bool, detail: impl FnOnce() -> String) {
        let e = self.tallies.entry(check.to_string()).or_default();
        e.checked += 1;
        if !ok {
            e.violated += 1;
            self.violations.push(Violation { check: check.to_string(), seed, k, detail: detail() });
        }
    }
}

fn leq(lhs: f64, rhs: f64, f_scale: f64) -> bool {
    lhs <= rhs + 1e-10 * (lhs.abs() + rhs.abs()) + 4.0 * f64::EPSILON * f_scale
}

/// Runs every check that applies to the trace's method.
pub fn audit_trace(trace: &Trace, ctx: &AuditContext) -> AuditReport {
    let mut rep = AuditReport::default();
    let ls = &ctx.ls;
    let seed = trace.seed;
    let k1 = StepConstants::worst_case(ctx.bounds, ls.eta_bar);
    let bk2 = k1.beta * k1.kappa1 * k1.kappa1;
    let lambda_1 = ctx.bounds.lambda_1;
    let tmax_sq = (1.0 + ls.t_max).powi(2);
    let eps = trace.epsilon;
    let fs = ctx.f_scale;
    let t_bar = match ctx.method {
        AuditMethod::Bounded { .. } => Some(t_bar_bounded(ls.c, ls.eta_bar, ctx.bounds)),
        AuditMethod::Dynamic { theta } => t_bar_dynamic(ls.c, theta, ls.eta_bar, ctx.bounds).ok(),
        AuditMethod::FiniteSum { .. } => t_bar_dynamic(ls.c, 0.0, ls.eta_bar, ctx.bounds).ok(),
    };
    let gaps = trace.gaps();
    let hit = gaps.iter().position(|g| *g <= eps);

    // A failed final iteration may have recorded a step it never applied.
    let usable = if trace.stop_reason == StopReason::NumericalFailure {
        trace.records.len().saturating_sub(1)
    } else {
        trace.records.len()
    };

    for (i, r) in trace.records.iter().take(usable).enumerate() {
        let k = r.k;
        let (gap, next) = (gaps[i], gaps[i + 1]);
        let before_hit = hit.is_none_or(|h| i < h);

        rep.record(STEP_RANGE, seed, k, r.t > 0.0 && r.t <= ls.t_max, || format!("t = {}", r.t));
        rep.record(ETA_RANGE, seed, k, r.eta > 0.0 && r.eta < ls.eta_bar, || format!("eta = {}", r.eta));
        rep.record(CG_DESCENT, seed, k, leq(r.slope, -bk2 * r.grad_norm * r.grad_norm, 0.0), || {
            format!("s'g = {:e} > -beta kappa1^2 ||g||^2 = {:e}", r.slope, -bk2 * r.grad_norm * r.grad_norm)
        });
        if r.true_iteration {
            let rhs = (1.0 + r.t * r.eta) * r.grad_norm;
            rep.record(TRUE_GRADIENT_CONSISTENCY, seed, k, r.grad_norm_true <= rhs * (1.0 + 1e-12), || {
                format!("||grad f|| = {:e} > (1 + t eta)||g|| = {rhs:e}", r.grad_norm_true)
            });
            if let Some(tb) = t_bar {
                if r.t <= tb {
                    rep.record(TRUE_SMALL_STEP_SUCCEEDS, seed, k, r.successful, || {
                        format!("true iteration with t = {} <= t_bar = {tb} was rejected", r.t)
                    });
                }
            }
        }
        if !r.successful {
            rep.record(UNSUCCESSFUL_UNCHANGED, seed, k, next == gap, || format!("gap {gap:e} -> {next:e}"));
        }

        match ctx.method {
            AuditMethod::Bounded { epsilon_f } => {
                if let Some(n) = &r.noise {
                    let ok = n.incumbent_error.abs() <= epsilon_f && n.trial_error.abs() <= epsilon_f;
                    rep.record(NOISE_WITHIN_BOUND, seed, k, ok, || format!("{n:?} vs eps_f = {epsilon_f}"));
                }
                if r.successful {
                    let a = r.t * bk2 * r.grad_norm * r.grad_norm;
                    let rhs1 = gap + ls.c * r.t * r.slope + 4.0 * epsilon_f;
                    let rhs2 = gap - ls.c * a + 4.0 * epsilon_f;
                    rep.record(BOUNDED_SUCCESSFUL_DECREASE, seed, k, leq(next, rhs1, fs) && leq(next, rhs2, fs), || {
                        format!("gap {gap:e} -> {next:e}, bounds {rhs1:e}, {rhs2:e}")
                    });
                    if r.true_iteration {
                        let rate = 2.0 * ls.c * bk2 * lambda_1 * r.t / (1.0 + r.t * r.eta).powi(2);
                        let rhs = (1.0 - rate) * gap + 4.0 * epsilon_f;
                        rep.record(BOUNDED_TRUE_CONTRACTION, seed, k, leq(next, rhs, fs), || {
                            format!("gap {gap:e} -> {next:e} > {rhs:e}")
                        });
                        if before_hit && 4.0 * epsilon_f <= eps {
                            let rhs = (1.0 - ls.c * bk2 * lambda_1 * r.t / tmax_sq) * (1.0 + 4.0 * epsilon_f / eps) * gap;
                            rep.record(BOUNDED_TRUE_Z_GAIN, seed, k, leq(next, rhs, fs), || {
                                format!("gap {gap:e} -> {next:e} > {rhs:e}")
                            });
                        }
                    } else if before_hit && eps > 0.0 {
                        let rhs = (1.0 + 4.0 * epsilon_f / eps) * gap;
                        rep.record(BOUNDED_FALSE_Z_LOSS, seed, k, leq(next, rhs, fs), || {
                            format!("gap {gap:e} -> {next:e} > {rhs:e}")
                        });
                    }
                }
            }
            AuditMethod::Dynamic { theta } => {
                if let Some(n) = &r.noise {
                    let allowance = -theta * r.t * r.slope;
                    let ok = n.incumbent_error.abs() <= n.bound
                        && n.trial_error.abs() <= n.bound
                        && (n.bound - allowance).abs() <= 1e-12 * allowance.abs();
                    rep.record(NOISE_WITHIN_BOUND, seed, k, ok, || format!("{n:?} vs allowance {allowance:e}"));
                }
                dynamic_checks(&mut rep, seed, r, gap, next, ls, theta, bk2 * lambda_1 / tmax_sq, fs);
            }
            AuditMethod::FiniteSum { population } => {
                dynamic_checks(&mut rep, seed, r, gap, next, ls, 0.0, bk2 * lambda_1 / tmax_sq, fs);
                if let Some(s) = &r.sampling {
                    let target = r.t * r.eta * r.grad_norm;
                    rep.record(GAMMA_EXIT, seed, k, s.gamma_final <= target, || {
                        format!("gamma_final = {:e} > t eta ||g|| = {target:e}", s.gamma_final)
                    });
                    let ok = (1..=population).contains(&s.gradient_sample) && (1..=population).contains(&s.hessian_sample);
                    rep.record(SAMPLE_RANGE, seed, k, ok, || format!("{s:?} with N = {population}"));
                }
            }
        }
    }
    rep
}

#[allow(clippy::too_many_arguments)]
fn dynamic_checks(
    rep: &mut AuditReport,
    seed: u64,
    r: &crate::solvers::IterationRecord,
    gap: f64,
    next: f64,
    ls: &LinesearchParams,
    theta: f64,
    base_rate: f64,
    fs: f64,
) {
    if !r.successful {
        return;
    }
    let k = r.k;
    let rhs = gap + (ls.c - 2.0 * theta) * r.t * r.slope;
    rep.record(DYNAMIC_SUCCESSFUL_DECREASE, seed, k, leq(next, rhs, fs), || {
        format!("gap {gap:e} -> {next:e} > {rhs:e}")
    });
    rep.record(DYNAMIC_MONOTONE, seed, k, leq(next, gap, fs), || format!("gap {gap:e} -> {next:e}"));
    if r.true_iteration {
        let rhs = (1.0 - 2.0 * (ls.c - 2.0 * theta) * base_rate * r.t) * gap;
        rep.record(DYNAMIC_TRUE_Z_GAIN, seed, k, leq(next, rhs, fs), || format!("gap {gap:e} -> {next:e} > {rhs:e}"));
    }
}
