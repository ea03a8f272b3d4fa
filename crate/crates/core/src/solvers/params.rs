use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Rule choosing the CG forcing term before the gradient is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EtaSchedule {
    /// `eta_bar / 2`
    #[default]
    HalfCap,
    /// A fixed value in `(0, eta_bar)`.
    Fixed(f64),
    /// `min(eta_bar / 2, 0.5^k)`
    Geometric,
    /// `min(eta_bar / 2, ||g_{k-1}||)`, using the previous gradient estimate
    /// since the current one is not drawn yet.
    GradientLinked,
}

impl EtaSchedule {
    pub fn value(&self, k: usize, previous_grad_norm: Option<f64>, eta_bar: f64) -> f64 {
        let half = 0.5 * eta_bar;
        match *self {
            EtaSchedule::HalfCap => half,
            EtaSchedule::Fixed(v) => v,
            EtaSchedule::Geometric => half.min(0.5f64.powi(k.min(1000) as i32)),
            EtaSchedule::GradientLinked => match previous_grad_norm {
                Some(g) if g > 0.0 => half.min(g),
                _ => half,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinesearchParams {
    /// Sufficient-decrease constant.
    pub c: f64,
    /// Backtracking factor.
    pub tau: f64,
    pub t_max: f64,
    pub t0: f64,
    /// Cap on the forcing terms.
    pub eta_bar: f64,
    #[serde(default)]
    pub eta_schedule: EtaSchedule,
}

impl Default for LinesearchParams {
    fn default() -> Self {
        Self { c: 0.1, tau: 0.5, t_max: 1.0, t0: 1.0, eta_bar: 0.5, eta_schedule: EtaSchedule::HalfCap }
    }
}

impl LinesearchParams {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must lie in (0,1), got {v}")))
            }
        };
        open_unit("c", self.c)?;
        open_unit("tau", self.tau)?;
        open_unit("eta_bar", self.eta_bar)?;
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(invalid(format!("t_max must be positive, got {}", self.t_max)));
        }
        if !(self.t0 > 0.0 && self.t0 <= self.t_max) {
            return Err(invalid(format!("t0 must lie in (0, t_max], got {}", self.t0)));
        }
        if let EtaSchedule::Fixed(v) = self.eta_schedule {
            if !(v > 0.0 && v < self.eta_bar) {
                return Err(invalid(format!("fixed eta must lie in (0, eta_bar), got {v}")));
            }
        }
        Ok(())
    }

    /// Checks the extra requirement `0 <= theta < c/2` of the dynamic-noise
    /// variant.
    pub fn validate_theta(&self, theta: f64) -> Result<()> {
        if !(theta >= 0.0 && theta < 0.5 * self.c) {
            return Err(invalid(format!("theta must lie in [0, c/2) = [0, {}), got {theta}", 0.5 * self.c)));
        }
        Ok(())
    }
}

/// Steplength update: grow by `1/tau` up to `t_max` on success, shrink by
/// `tau` otherwise.
pub fn step_update(t: f64, successful: bool, tau: f64, t_max: f64) -> f64 {
    if successful {
        t_max.min(t / tau)
    } else {
        tau * t
    }
}

/// Armijo test relaxed by `2 eps_f`; `slope = s'g`.
pub fn accept_test_bounded(f_inc: f64, f_trial: f64, c: f64, t: f64, slope: f64, epsilon_f: f64) -> bool {
    f_trial <= f_inc + c * t * slope + 2.0 * epsilon_f
}

/// Classical Armijo test; `slope = s'g`.
pub fn accept_test(f_inc: f64, f_trial: f64, c: f64, t: f64, slope: f64) -> bool {
    f_trial <= f_inc + c * t * slope
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_update_examples() {
        assert_eq!(step_update(1.0, true, 0.5, 1.0), 1.0);
        assert_eq!(step_update(0.1, false, 0.5, 1.0), 0.05);
        assert_eq!(step_update(0.6, true, 0.5, 1.0), 1.0);
    }

    #[test]
    fn boundary_counts_as_success() {
        assert!(accept_test_bounded(1.0, 0.9 + 0.02, 0.1, 1.0, -1.0, 0.01));
        assert!(accept_test(1.0, 0.5, 0.5, 1.0, -1.0));
        assert!(!accept_test(1.0, 0.5 + 1e-12, 0.5, 1.0, -1.0));
    }

    #[test]
    fn schedules() {
        assert_eq!(EtaSchedule::HalfCap.value(3, None, 0.5), 0.25);
        assert_eq!(EtaSchedule::Geometric.value(0, None, 0.5), 0.25);
        assert_eq!(EtaSchedule::Geometric.value(4, None, 0.5), 0.0625);
        assert_eq!(EtaSchedule::GradientLinked.value(4, Some(0.01), 0.5), 0.01);
        assert_eq!(EtaSchedule::GradientLinked.value(0, None, 0.5), 0.25);
    }

    #[test]
    fn theta_must_be_below_half_c() {
        let ls = LinesearchParams::default();
        assert!(ls.validate_theta(0.04).is_ok());
        assert!(ls.validate_theta(0.05).is_err());
    }
}
