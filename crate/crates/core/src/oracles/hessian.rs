use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cg::SpectrumBounds;
use crate::error::{invalid, Result};
use crate::linalg::{clip_spectrum, random_symmetric_with_norm, symmetric_spectral_norm, Matrix, Vector};
use crate::problems::Problem;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HessianEstimatorParams {
    pub delta_h: f64,
    /// `C` in `||H - hess f|| <= C eta`.
    pub accuracy_constant: f64,
}

impl HessianEstimatorParams {
    pub fn new(delta_h: f64, accuracy_constant: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta_h) {
            return Err(invalid(format!("delta_h must lie in [0,1], got {delta_h}")));
        }
        if !(accuracy_constant >= 0.0 && accuracy_constant.is_finite()) {
            return Err(invalid(format!("accuracy constant must be non-negative, got {accuracy_constant}")));
        }
        Ok(Self { delta_h, accuracy_constant })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HessianEstimate {
    /// Symmetric, spectrum inside the problem's certified bounds.
    pub matrix: Matrix,
    /// Whether `||H - hess f|| <= C eta` holds for the returned matrix.
    pub indicator: bool,
    pub accurate_branch: bool,
    pub error_norm: f64,
}

/// Relative shrink applied to the accurate-branch perturbation so the
/// re-derived indicator survives eigendecomposition rounding.
const ACCURATE_MARGIN: f64 = 1e-9;

pub fn estimate_hessian_from<R: Rng + ?Sized>(
    true_hessian: &Matrix,
    bounds: SpectrumBounds,
    eta: f64,
    params: &HessianEstimatorParams,
    rng: &mut R,
) -> HessianEstimate {
    let radius = params.accuracy_constant * eta;
    let accurate_branch = rng.random::<f64>() >= params.delta_h;
    if radius == 0.0 && accurate_branch {
        return HessianEstimate { matrix: true_hessian.clone(), indicator: true, accurate_branch, error_norm: 0.0 };
    }
    let n = true_hessian.nrows();
    let size = if accurate_branch { radius * (1.0 - ACCURATE_MARGIN) } else { 3.0 * radius };
    let perturbation = random_symmetric_with_norm(rng, n, size);
    let clipped = clip_spectrum(&(true_hessian + perturbation), bounds.lambda_1, bounds.lambda_n);
    // Clipping can enlarge the spectral error. In the accurate branch, pull
    // back along the segment to the true Hessian; both ends satisfy the
    // spectrum bounds, so every point between them does too.
    let matrix = if accurate_branch {
        let offset = &clipped - true_hessian;
        let norm = symmetric_spectral_norm(&offset);
        if norm > size { true_hessian + offset * (size / norm) } else { clipped }
    } else {
        clipped
    };
    let error_norm = symmetric_spectral_norm(&(&matrix - true_hessian));
    HessianEstimate { matrix, indicator: error_norm <= radius, accurate_branch, error_norm }
}

pub fn estimate_hessian<P: Problem + ?Sized, R: Rng + ?Sized>(
    problem: &P,
    x: &Vector,
    eta: f64,
    params: &HessianEstimatorParams,
    rng: &mut R,
) -> HessianEstimate {
    estimate_hessian_from(&problem.hessian(x), problem.bounds(), eta, params, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn zero_radius_returns_exact_hessian() {
        let h = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 3.0]));
        let params = HessianEstimatorParams::new(0.0, 0.0).unwrap();
        let bounds = SpectrumBounds::new(1.0, 4.0).unwrap();
        let est = estimate_hessian_from(&h, bounds, 0.1, &params, &mut seeded(0));
        assert_eq!(est.matrix, h);
        assert!(est.indicator);
    }
}
