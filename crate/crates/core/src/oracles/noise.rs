use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, NcgError, Result};
use crate::linalg::Vector;
use crate::problems::Problem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseLaw {
    /// `e ~ U[-bound, bound]`
    Uniform,
    /// `-bound` at the incumbent and `+bound` at the trial point, which makes
    /// the sufficient-decrease test as hard to pass as the bound allows.
    AdversarialSign,
    /// `e = +bound`
    Constant,
}

/// Where a function value is requested within one iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalPoint {
    Incumbent,
    Trial,
}

impl NoiseLaw {
    pub fn draw<R: Rng + ?Sized>(self, bound: f64, point: EvalPoint, rng: &mut R) -> f64 {
        if bound == 0.0 {
            return 0.0;
        }
        match self {
            NoiseLaw::Uniform => rng.random_range(-bound..=bound),
            NoiseLaw::AdversarialSign => match point {
                EvalPoint::Incumbent => -bound,
                EvalPoint::Trial => bound,
            },
            NoiseLaw::Constant => bound,
        }
    }
}

/// Function noise with a fixed absolute bound `epsilon_f`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundedNoise {
    pub epsilon_f: f64,
    pub law: NoiseLaw,
}

impl BoundedNoise {
    pub fn new(epsilon_f: f64, law: NoiseLaw) -> Result<Self> {
        if !(epsilon_f >= 0.0 && epsilon_f.is_finite()) {
            return Err(invalid(format!("epsilon_f must be non-negative, got {epsilon_f}")));
        }
        Ok(Self { epsilon_f, law })
    }

    pub fn sample_error<R: Rng + ?Sized>(&self, point: EvalPoint, rng: &mut R) -> f64 {
        self.law.draw(self.epsilon_f, point, rng)
    }
}

pub fn noisy_f_bounded<P: Problem + ?Sized, R: Rng + ?Sized>(
    problem: &P,
    x: &Vector,
    noise: &BoundedNoise,
    point: EvalPoint,
    rng: &mut R,
) -> f64 {
    problem.value(x) + noise.sample_error(point, rng)
}

/// Function noise whose bound shrinks with the predicted decrease:
/// `|e| <= -theta t s'g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicNoise {
    pub theta: f64,
    pub law: NoiseLaw,
}

impl DynamicNoise {
    pub fn new(theta: f64, law: NoiseLaw) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(invalid(format!("theta must be positive, got {theta}")));
        }
        Ok(Self { theta, law })
    }

    /// `-theta t slope`, where `slope = s'g`.
    pub fn allowance(&self, t: f64, slope: f64) -> f64 {
        -self.theta * t * slope
    }

    pub fn sample_error<R: Rng + ?Sized>(&self, allowance: f64, point: EvalPoint, rng: &mut R) -> Result<f64> {
        if !(allowance > 0.0) {
            return Err(NcgError::NonPositiveAllowance(allowance));
        }
        Ok(self.law.draw(allowance, point, rng))
    }
}

pub fn noisy_f_dynamic<P: Problem + ?Sized, R: Rng + ?Sized>(
    problem: &P,
    x: &Vector,
    allowance: f64,
    law: NoiseLaw,
    point: EvalPoint,
    rng: &mut R,
) -> Result<f64> {
    if !(allowance > 0.0) {
        return Err(NcgError::NonPositiveAllowance(allowance));
    }
    Ok(problem.value(x) + law.draw(allowance, point, rng))
}
