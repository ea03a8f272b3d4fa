use crate::cg::SpectrumBounds;
use crate::error::{invalid, Result};
use crate::linalg::{LinearOperator, Matrix, Vector};

use super::{reference_newton, FiniteSum, Problem, Reference};

/// Ridge-regularized logistic regression,
/// `f(x) = (1/N) sum_i log(1 + exp(-y_i a_i'x)) + (mu/2) ||x||^2`.
///
/// Each component carries the full ridge term, so every `f_i` is
/// `mu`-strongly convex and the certified spectrum is
/// `[mu, mu + max_i ||a_i||^2 / 4]` (the logistic curvature never exceeds
/// 1/4).
#[derive(Clone, Debug)]
pub struct LogisticProblem {
    /// Samples stored as columns (`n x N`) so each `a_i` is contiguous.
    samples: Matrix,
    labels: Vec<f64>,
    ridge: f64,
    max_row_norm: f64,
    reference: Reference,
}

/// Builds the problem from an `N x n` feature matrix and solves for the
/// reference minimizer with damped Newton to `||grad f|| <= 1e-12`.
pub fn make_logistic(features: &Matrix, labels: &[f64], ridge: f64) -> Result<LogisticProblem> {
    if !(ridge > 0.0 && ridge.is_finite()) {
        return Err(invalid(format!("ridge must be positive, got {ridge}")));
    }
    if features.nrows() != labels.len() {
        return Err(invalid(format!(
            "{} feature rows but {} labels",
            features.nrows(),
            labels.len()
        )));
    }
    if features.nrows() == 0 || features.ncols() == 0 {
        return Err(invalid("empty feature matrix"));
    }
    if let Some(bad) = labels.iter().find(|y| **y != 1.0 && **y != -1.0) {
        return Err(invalid(format!("labels must be -1 or +1, got {bad}")));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite feature value"));
    }
    let samples = features.transpose();
    let max_row_norm = samples.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let n = samples.nrows();
    let mut problem = LogisticProblem {
        samples,
        labels: labels.to_vec(),
        ridge,
        max_row_norm,
        reference: Reference { minimizer: Vector::zeros(n), min_value: f64::NAN, grad_norm: f64::NAN, iterations: 0 },
    };
    problem.reference = reference_newton(&problem, &Vector::zeros(n), 1e-12, 200)?;
    Ok(problem)
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(u))` without overflow.
fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

impl LogisticProblem {
    pub fn num_features(&self) -> usize {
        self.samples.nrows()
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn max_row_norm(&self) -> f64 {
        self.max_row_norm
    }

    pub fn reference(&self) -> &Reference {
        &self.reference
    }

    fn margin(&self, i: usize, x: &Vector) -> f64 {
        self.labels[i] * self.samples.column(i).dot(x)
    }

    /// Scalar multiplying `a_i` in the loss gradient: `-y_i sigma(-y_i a_i'x)`.
    fn loss_slope(&self, i: usize, x: &Vector) -> f64 {
        -self.labels[i] * sigmoid(-self.margin(i, x))
    }

    /// Loss curvature `sigma(z)(1 - sigma(z))` at the margin of sample `i`.
    fn loss_curvature(&self, i: usize, x: &Vector) -> f64 {
        let s = sigmoid(self.margin(i, x));
        s * (1.0 - s)
    }
}

struct LogisticSubsetHessian<'a> {
    problem: &'a LogisticProblem,
    indices: Vec<usize>,
    weights: Vec<f64>,
}

impl LinearOperator for LogisticSubsetHessian<'_> {
    fn dim(&self) -> usize {
        self.problem.num_features()
    }

    fn apply(&self, v: &Vector) -> Vector {
        let mut acc = Vector::zeros(self.dim());
        for (&i, &w) in self.indices.iter().zip(&self.weights) {
            let a = self.problem.samples.column(i);
            acc.axpy(w * a.dot(v), &a, 1.0);
        }
        acc / self.indices.len() as f64 + v * self.problem.ridge
    }
}

impl Problem for LogisticProblem {
    fn dim(&self) -> usize {
        self.num_features()
    }

    fn value(&self, x: &Vector) -> f64 {
        let n_samples = self.labels.len();
        let loss: f64 = (0..n_samples).map(|i| softplus(-self.margin(i, x))).sum();
        loss / n_samples as f64 + 0.5 * self.ridge * x.norm_squared()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let all: Vec<usize> = (0..self.labels.len()).collect();
        self.subset_gradient(x, &all)
    }

    fn hess_vec(&self, x: &Vector, v: &Vector) -> Vector {
        self.hessian_operator(x).apply(v)
    }

    fn hessian(&self, x: &Vector) -> Matrix {
        let n_samples = self.labels.len();
        let mut scaled = self.samples.clone();
        for (i, mut col) in scaled.column_iter_mut().enumerate() {
            col *= (self.loss_curvature(i, x) / n_samples as f64).sqrt();
        }
        let mut h = &scaled * scaled.transpose();
        for j in 0..h.nrows() {
            h[(j, j)] += self.ridge;
        }
        h
    }

    fn bounds(&self) -> SpectrumBounds {
        SpectrumBounds {
            lambda_1: self.ridge,
            lambda_n: self.ridge + 0.25 * self.max_row_norm * self.max_row_norm,
        }
    }

    /// The loss third derivative `s(1-s)(1-2s)` is bounded by `1/(6 sqrt 3)`,
    /// so `||hess f_i(x) - hess f_i(y)|| <= ||a_i||^3 ||x - y|| / (6 sqrt 3)`.
    fn hessian_lipschitz(&self) -> f64 {
        self.max_row_norm.powi(3) / (6.0 * 3f64.sqrt())
    }

    fn minimizer(&self) -> Option<&Vector> {
        Some(&self.reference.minimizer)
    }

    fn min_value(&self) -> Option<f64> {
        Some(self.reference.min_value).filter(|v| v.is_finite())
    }

    fn hessian_operator<'a>(&'a self, x: &Vector) -> Box<dyn LinearOperator + 'a> {
        let all: Vec<usize> = (0..self.labels.len()).collect();
        self.subset_hessian(x, &all)
    }
}

impl FiniteSum for LogisticProblem {
    fn num_components(&self) -> usize {
        self.labels.len()
    }

    fn component_value(&self, i: usize, x: &Vector) -> f64 {
        softplus(-self.margin(i, x)) + 0.5 * self.ridge * x.norm_squared()
    }

    fn component_gradient(&self, i: usize, x: &Vector) -> Vector {
        self.samples.column(i) * self.loss_slope(i, x) + x * self.ridge
    }

    fn component_hess_vec(&self, i: usize, x: &Vector, v: &Vector) -> Vector {
        let a = self.samples.column(i);
        a * (self.loss_curvature(i, x) * a.dot(v)) + v * self.ridge
    }

    fn component_grad_bound(&self, x: &Vector) -> f64 {
        self.max_row_norm + self.ridge * x.norm()
    }

    fn component_hess_bound(&self, _x: &Vector) -> f64 {
        0.25 * self.max_row_norm * self.max_row_norm + self.ridge
    }

    /// The ridge term is added once after averaging the loss slopes, so a
    /// full index set reproduces [`Problem::gradient`] bit for bit.
    fn subset_gradient(&self, x: &Vector, indices: &[usize]) -> Vector {
        let mut acc = Vector::zeros(self.dim());
        for &i in indices {
            acc.axpy(self.loss_slope(i, x), &self.samples.column(i), 1.0);
        }
        acc / indices.len() as f64 + x * self.ridge
    }

    fn subset_hessian<'a>(&'a self, x: &Vector, indices: &[usize]) -> Box<dyn LinearOperator + 'a> {
        let weights = indices.iter().map(|&i| self.loss_curvature(i, x)).collect();
        Box::new(LogisticSubsetHessian { problem: self, indices: indices.to_vec(), weights })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_at_origin() {
        let features = Matrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let p = make_logistic(&features, &[1.0], 1.0).unwrap();
        let x = Vector::zeros(2);
        assert!((p.value(&x) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(p.gradient(&x), Vector::from_vec(vec![-0.5, 0.0]));
        assert_eq!(p.component_gradient(0, &x), p.gradient(&x));
    }

    #[test]
    fn rejects_bad_inputs() {
        let features = Matrix::from_row_slice(2, 1, &[1.0, 2.0]);
        assert!(make_logistic(&features, &[1.0, 0.0], 1.0).is_err());
        assert!(make_logistic(&features, &[1.0, -1.0], 0.0).is_err());
        assert!(make_logistic(&features, &[1.0], 1.0).is_err());
    }

    #[test]
    fn stable_for_large_margins() {
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0 && softplus(-800.0) < 1e-300);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }
}
