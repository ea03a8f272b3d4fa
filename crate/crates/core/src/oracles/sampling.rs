use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, NcgError, Result};
use crate::linalg::{LinearOperator, Vector};
use crate::problems::FiniteSum;

/// Parameters of the subsampled estimators and the gradient accuracy loop.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsamplingParams {
    /// Shrink factor of the target accuracy between passes.
    pub kappa_gamma: f64,
    /// Target gradient accuracy on the first pass.
    pub gamma_0: f64,
    pub delta_g: f64,
    pub delta_h: f64,
    /// `C` in the Hessian accuracy target `C eta`.
    pub accuracy_constant: f64,
}

impl SubsamplingParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa_gamma > 0.0 && self.kappa_gamma < 1.0) {
            return Err(invalid(format!("kappa_gamma must lie in (0,1), got {}", self.kappa_gamma)));
        }
        if !(self.gamma_0 > 0.0 && self.gamma_0.is_finite()) {
            return Err(invalid(format!("gamma_0 must be positive, got {}", self.gamma_0)));
        }
        for (name, d) in [("delta_g", self.delta_g), ("delta_h", self.delta_h)] {
            if !(d > 0.0 && d < 1.0) {
                return Err(invalid(format!("{name} must lie in (0,1), got {d}")));
            }
        }
        if !(self.accuracy_constant > 0.0 && self.accuracy_constant.is_finite()) {
            return Err(invalid(format!("accuracy constant must be positive, got {}", self.accuracy_constant)));
        }
        Ok(())
    }

    /// `gamma_0 kappa_gamma^pass`
    pub fn gamma(&self, pass: usize) -> f64 {
        self.gamma_0 * self.kappa_gamma.powi(pass as i32)
    }
}

/// Matrix Bernstein sample count `4 (k/a)(k/a + 1/3) log(arg)`, clamped to
/// `[1, population]`.
fn bernstein_size(bound: f64, accuracy: f64, log_arg: f64, population: usize) -> usize {
    let ratio = bound / accuracy;
    let size = 4.0 * ratio * (ratio + 1.0 / 3.0) * log_arg.ln();
    if !size.is_finite() || size >= population as f64 {
        population
    } else {
        (size.ceil() as usize).max(1)
    }
}

/// Gradient sample count for accuracy `gamma` with failure probability
/// `delta_g` in dimension `n`.
pub fn gradient_sample_size(kappa_fg: f64, gamma: f64, delta_g: f64, n: usize, population: usize) -> usize {
    bernstein_size(kappa_fg, gamma, (n as f64 + 1.0) / delta_g, population)
}

/// Hessian sample count for accuracy `c * eta` with failure probability
/// `delta_h` in dimension `n`.
pub fn hessian_sample_size(
    kappa_fh: f64,
    c: f64,
    eta: f64,
    delta_h: f64,
    n: usize,
    population: usize,
) -> usize {
    bernstein_size(kappa_fh, c * eta, 2.0 * n as f64 / delta_h, population)
}

/// Uniform sample of `size` distinct indices from `0..population`, sorted so
/// that sums over a full sample follow the natural order.
pub fn draw_indices<R: Rng + ?Sized>(population: usize, size: usize, rng: &mut R) -> Result<Vec<usize>> {
    if size == 0 || size > population {
        return Err(NcgError::SampleSize { size, population });
    }
    let mut idx = rand::seq::index::sample(rng, population, size).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

pub fn subsampled_gradient<F: FiniteSum + ?Sized, R: Rng + ?Sized>(
    fsp: &F,
    x: &Vector,
    sample_size: usize,
    rng: &mut R,
) -> Result<Vector> {
    let idx = draw_indices(fsp.num_components(), sample_size, rng)?;
    Ok(fsp.subset_gradient(x, &idx))
}

pub fn subsampled_hessian<'a, F: FiniteSum + ?Sized, R: Rng + ?Sized>(
    fsp: &'a F,
    x: &Vector,
    sample_size: usize,
    rng: &mut R,
) -> Result<Box<dyn LinearOperator + 'a>> {
    let idx = draw_indices(fsp.num_components(), sample_size, rng)?;
    Ok(fsp.subset_hessian(x, &idx))
}
