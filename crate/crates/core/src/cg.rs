//! Truncated conjugate gradient for `H s = -g`, started from `s = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, NcgError, Result};
use crate::linalg::{all_finite, LinearOperator, Vector};

/// The recurrence residual is replaced by `H s + g` every this many
/// iterations.
pub const RESIDUAL_REFRESH: usize = 50;

/// Relative rounding allowance used by [`verify_step_constants`].
pub const STEP_CHECK_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcingTerm {
    pub eta: f64,
    pub eta_bar: f64,
}

impl ForcingTerm {
    pub fn new(eta: f64, eta_bar: f64) -> Result<Self> {
        if !(eta_bar > 0.0 && eta_bar < 1.0) {
            return Err(invalid(format!("eta_bar must lie in (0,1), got {eta_bar}")));
        }
        if !(eta > 0.0 && eta < eta_bar) {
            return Err(invalid(format!("eta must lie in (0, {eta_bar}), got {eta}")));
        }
        Ok(Self { eta, eta_bar })
    }
}

/// Certified bounds `lambda_1 I <= H <= lambda_n I`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBounds {
    pub lambda_1: f64,
    pub lambda_n: f64,
}

impl SpectrumBounds {
    pub fn new(lambda_1: f64, lambda_n: f64) -> Result<Self> {
        if !(lambda_1 > 0.0 && lambda_1.is_finite()) {
            return Err(invalid(format!("lambda_1 must be positive, got {lambda_1}")));
        }
        if !(lambda_n >= lambda_1 && lambda_n.is_finite()) {
            return Err(invalid(format!("lambda_n = {lambda_n} must be >= lambda_1 = {lambda_1}")));
        }
        Ok(Self { lambda_1, lambda_n })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgResult {
    pub step: Vector,
    /// `H step + g`, recomputed explicitly at termination.
    pub residual: Vector,
    pub iterations: usize,
    /// `step' H step`, evaluated directly.
    pub curvature_product: f64,
}

impl CgResult {
    pub fn residual_norm(&self) -> f64 {
        self.residual.norm()
    }
}

/// Runs CG on `H s = -g` from the zero vector and returns the first iterate
/// with `||H s + g|| <= eta ||g||`. `max_iters = None` means `dim(H)`.
///
/// The reported residual is always the explicitly recomputed one. When the
/// recurrence claims convergence but the explicit residual disagrees, the
/// iteration continues from the explicit residual.
pub fn truncated_cg<O: LinearOperator + ?Sized>(
    hessian: &O,
    g: &Vector,
    eta: f64,
    max_iters: Option<usize>,
) -> Result<CgResult> {
    let n = g.len();
    if hessian.dim() != n {
        return Err(NcgError::DimensionMismatch { expected: hessian.dim(), got: n });
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid(format!("CG forcing term must lie in (0,1), got {eta}")));
    }
    if !all_finite(g) {
        return Err(NcgError::NonFinite("CG right-hand side"));
    }
    let g_norm = g.norm();
    if g_norm == 0.0 {
        return Err(NcgError::ZeroGradient);
    }
    let max_iters = max_iters.unwrap_or(n);
    let tol = eta * g_norm;

    let mut s = Vector::zeros(n);
    // r tracks -g - H s, the negative of the reported residual.
    let mut r = -g;
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    let mut ratio = 1.0;

    for iter in 1..=max_iters {
        let q = hessian.apply(&p);
        let pq = p.dot(&q);
        if !pq.is_finite() {
            return Err(NcgError::NonFinite("CG curvature p'Hp"));
        }
        if pq <= 0.0 {
            return Err(NcgError::NotPositiveDefinite(pq));
        }
        let alpha = rr / pq;
        s.axpy(alpha, &p, 1.0);
        if iter % RESIDUAL_REFRESH == 0 {
            r = -(hessian.apply(&s) + g);
        } else {
            r.axpy(-alpha, &q, 1.0);
        }
        let rr_new = r.norm_squared();
        if !rr_new.is_finite() || !all_finite(&s) {
            return Err(NcgError::NonFinite("CG iterate"));
        }
        if rr_new.sqrt() <= tol {
            let hs = hessian.apply(&s);
            let residual = &hs + g;
            let res_norm = residual.norm();
            if res_norm <= tol {
                return Ok(CgResult {
                    curvature_product: s.dot(&hs),
                    step: s,
                    residual,
                    iterations: iter,
                });
            }
            r = -residual;
        }
        ratio = r.norm() / g_norm;
        let rr_next = r.norm_squared();
        let beta = rr_next / rr;
        p = &r + p * beta;
        rr = rr_next;
    }
    Err(NcgError::CgBudgetExhausted { iterations: max_iters, eta, ratio })
}

/// Worst-case step-quality constants implied by the spectrum bounds and the
/// forcing-term cap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepConstants {
    pub kappa1: f64,
    pub kappa2: f64,
    pub beta: f64,
}

impl StepConstants {
    pub fn worst_case(bounds: SpectrumBounds, eta_bar: f64) -> Self {
        Self {
            kappa1: (1.0 - eta_bar) / bounds.lambda_n,
            kappa2: 1.0 / bounds.lambda_1,
            beta: bounds.lambda_1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepCheck {
    /// `kappa1 ||g|| <= ||s||`
    pub kappa1_ok: bool,
    /// `||s|| <= kappa2 ||g||`
    pub kappa2_ok: bool,
    /// `-g's >= beta ||s||^2`
    pub beta_ok: bool,
}

impl StepCheck {
    pub fn all_ok(&self) -> bool {
        self.kappa1_ok && self.kappa2_ok && self.beta_ok
    }
}

/// Checks the norm and descent bounds of a CG step against the worst-case
/// constants. Each comparison allows a relative rounding slack of
/// [`STEP_CHECK_RTOL`].
pub fn verify_step_constants(
    result: &CgResult,
    g: &Vector,
    bounds: SpectrumBounds,
    eta_bar: f64,
) -> StepCheck {
    let k = StepConstants::worst_case(bounds, eta_bar);
    let s_norm = result.step.norm();
    let g_norm = g.norm();
    let descent = -g.dot(&result.step);
    let lo = k.kappa1 * g_norm;
    let hi = k.kappa2 * g_norm;
    let curv = k.beta * s_norm * s_norm;
    StepCheck {
        kappa1_ok: lo <= s_norm * (1.0 + STEP_CHECK_RTOL),
        kappa2_ok: s_norm <= hi * (1.0 + STEP_CHECK_RTOL),
        beta_ok: descent >= curv - STEP_CHECK_RTOL * (descent.abs() + curv),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn diag(v: &[f64]) -> Matrix {
        Matrix::from_diagonal(&Vector::from_column_slice(v))
    }

    #[test]
    fn identity_is_solved_in_one_step() {
        let h = Matrix::identity(2, 2);
        let g = Vector::from_vec(vec![3.0, 4.0]);
        let res = truncated_cg(&h, &g, 0.1, None).unwrap();
        assert_eq!(res.iterations, 1);
        assert_eq!(res.step, Vector::from_vec(vec![-3.0, -4.0]));
        assert_eq!(res.residual_norm(), 0.0);
    }

    #[test]
    fn diagonal_system_tight_tolerance() {
        let h = diag(&[2.0, 8.0]);
        let g = Vector::from_vec(vec![2.0, 8.0]);
        let res = truncated_cg(&h, &g, 1e-12, None).unwrap();
        assert!((res.step[0] + 1.0).abs() < 1e-14 && (res.step[1] + 1.0).abs() < 1e-14);
        assert!((res.curvature_product - 10.0).abs() < 1e-12);
        assert!((res.curvature_product + res.step.dot(&g)).abs() < 1e-12);
    }

    #[test]
    fn loose_tolerance_returns_first_iterate() {
        let h = diag(&[2.0, 8.0]);
        let g = Vector::from_vec(vec![2.0, 8.0]);
        let res = truncated_cg(&h, &g, 0.99, None).unwrap();
        assert_eq!(res.iterations, 1);
        let expected = &g * (-68.0 / 520.0);
        assert!((&res.step - expected).norm() < 1e-15);
        assert!(res.residual_norm() <= 0.99 * g.norm());
    }

    #[test]
    fn zero_rhs_is_rejected() {
        let h = Matrix::identity(3, 3);
        assert!(matches!(
            truncated_cg(&h, &Vector::zeros(3), 0.1, None),
            Err(NcgError::ZeroGradient)
        ));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let h = diag(&[1.0, 2.0, 3.0, 4.0]);
        let g = Vector::from_vec(vec![1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(
            truncated_cg(&h, &g, 1e-10, Some(1)),
            Err(NcgError::CgBudgetExhausted { .. })
        ));
    }

    #[test]
    fn indefinite_operator_is_rejected() {
        let h = diag(&[1.0, -1.0]);
        let g = Vector::from_vec(vec![0.0, 1.0]);
        assert!(truncated_cg(&h, &g, 0.1, None).is_err());
    }

    #[test]
    fn worst_case_constants() {
        let k = StepConstants::worst_case(SpectrumBounds::new(1.0, 4.0).unwrap(), 0.5);
        assert_eq!((k.kappa1, k.kappa2, k.beta), (0.125, 1.0, 1.0));
    }

    #[test]
    fn identity_step_meets_constants() {
        let h = Matrix::identity(3, 3);
        let g = Vector::from_vec(vec![0.3, -1.7, 2.2]);
        let res = truncated_cg(&h, &g, 1e-6, None).unwrap();
        let check = verify_step_constants(&res, &g, SpectrumBounds::new(1.0, 1.0).unwrap(), 0.5);
        assert!(check.all_ok());
    }

    #[test]
    fn forcing_term_validation() {
        assert!(ForcingTerm::new(0.25, 0.5).is_ok());
        assert!(ForcingTerm::new(0.5, 0.5).is_err());
        assert!(ForcingTerm::new(0.1, 1.0).is_err());
    }
}
