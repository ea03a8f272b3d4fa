//! Strongly convex test objectives with exact derivatives and certified
//! spectrum bounds.

mod dataset;
mod logistic;
mod quadratic;

pub use dataset::Dataset;
pub use logistic::{make_logistic, LogisticProblem};
pub use quadratic::{log_spaced, make_quadratic, QuadraticProblem};

use crate::cg::SpectrumBounds;
use crate::error::{NcgError, Result};
use crate::linalg::{all_finite, LinearOperator, Matrix, Vector};

/// Negative gaps down to this value are treated as rounding and clamped.
pub const GAP_CLAMP: f64 = 1e-14;

pub trait Problem: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn hess_vec(&self, x: &Vector, v: &Vector) -> Vector;
    /// Dense Hessian, used where a perturbation has to be eigen-clipped.
    fn hessian(&self, x: &Vector) -> Matrix;
    fn bounds(&self) -> SpectrumBounds;
    /// Lipschitz constant of the Hessian in the spectral norm.
    fn hessian_lipschitz(&self) -> f64;
    fn minimizer(&self) -> Option<&Vector>;
    fn min_value(&self) -> Option<f64>;

    fn hessian_operator<'a>(&'a self, x: &Vector) -> Box<dyn LinearOperator + 'a> {
        Box::new(ExactHessian { problem: self, x: x.clone() })
    }
}

struct ExactHessian<'a, P: ?Sized> {
    problem: &'a P,
    x: Vector,
}

impl<P: Problem + ?Sized> LinearOperator for ExactHessian<'_, P> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn apply(&self, v: &Vector) -> Vector {
        self.problem.hess_vec(&self.x, v)
    }
}

/// A mean of `N` component functions, each strongly convex.
pub trait FiniteSum: Problem {
    fn num_components(&self) -> usize;
    fn component_value(&self, i: usize, x: &Vector) -> f64;
    fn component_gradient(&self, i: usize, x: &Vector) -> Vector;
    fn component_hess_vec(&self, i: usize, x: &Vector, v: &Vector) -> Vector;
    /// Upper bound on `max_i ||grad f_i(x)||`.
    fn component_grad_bound(&self, x: &Vector) -> f64;
    /// Upper bound on `max_i ||hess f_i(x)||`.
    fn component_hess_bound(&self, x: &Vector) -> f64;

    /// Mean of the component gradients over `indices`, summed in the given
    /// order.
    fn subset_gradient(&self, x: &Vector, indices: &[usize]) -> Vector {
        let mut acc = Vector::zeros(self.dim());
        for &i in indices {
            acc += self.component_gradient(i, x);
        }
        acc / indices.len() as f64
    }

    /// Operator `v -> mean over indices of hess f_i(x) v`.
    fn subset_hessian<'a>(&'a self, x: &Vector, indices: &[usize]) -> Box<dyn LinearOperator + 'a> {
        let indices = indices.to_vec();
        let x = x.clone();
        let n = self.dim();
        Box::new(crate::linalg::FnOperator::new(n, move |v: &Vector| {
            let mut acc = Vector::zeros(n);
            for &i in &indices {
                acc += self.component_hess_vec(i, &x, v);
            }
            acc / indices.len() as f64
        }))
    }
}

/// `f(x) - f*`, clamped at zero for rounding-level negatives.
pub fn optimality_gap<P: Problem + ?Sized>(problem: &P, x: &Vector) -> Result<f64> {
    let f_star = problem.min_value().ok_or(NcgError::MissingReference)?;
    gap_from_value(problem.value(x), f_star)
}

pub fn gap_from_value(f: f64, f_star: f64) -> Result<f64> {
    let gap = f - f_star;
    if !gap.is_finite() {
        return Err(NcgError::NonFinite("optimality gap"));
    }
    if gap >= 0.0 {
        Ok(gap)
    } else if gap >= -GAP_CLAMP {
        Ok(0.0)
    } else {
        Err(NcgError::NegativeGap(gap))
    }
}

#[derive(Clone, Debug)]
pub struct Reference {
    pub minimizer: Vector,
    pub min_value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Damped Newton with dense Cholesky solves, run until `||grad f|| <= tol`.
/// Used to certify `x*` and `f*` for problems without a closed form.
pub fn reference_newton<P: Problem + ?Sized>(
    problem: &P,
    x0: &Vector,
    tol: f64,
    max_iters: usize,
) -> Result<Reference> {
    let mut x = x0.clone();
    let mut f = problem.value(&x);
    let mut g = problem.gradient(&x);
    for iter in 0..=max_iters {
        let g_norm = g.norm();
        if !g_norm.is_finite() || !f.is_finite() {
            return Err(NcgError::ReferenceSolve("non-finite value".into()));
        }
        if g_norm <= tol {
            return Ok(Reference { minimizer: x, min_value: f, grad_norm: g_norm, iterations: iter });
        }
        if iter == max_iters {
            break;
        }
        let h = problem.hessian(&x);
        let chol = h
            .cholesky()
            .ok_or_else(|| NcgError::ReferenceSolve("Hessian not positive definite".into()))?;
        let d = -chol.solve(&g);
        let slope = g.dot(&d);
        let mut t = 1.0;
        loop {
            let trial = &x + &d * t;
            let f_trial = problem.value(&trial);
            let g_trial = problem.gradient(&trial);
            // Near the solution f stops resolving the decrease; a smaller
            // gradient is then accepted instead.
            if f_trial <= f + 1e-4 * t * slope || (all_finite(&g_trial) && g_trial.norm() < g_norm) {
                x = trial;
                f = f_trial;
                g = g_trial;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(NcgError::ReferenceSolve("linesearch stalled".into()));
            }
        }
    }
    Err(NcgError::ReferenceSolve(format!("no convergence in {max_iters} Newton steps")))
}
