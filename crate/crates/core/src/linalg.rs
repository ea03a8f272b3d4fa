//! Dense vector/matrix aliases, the matrix-free operator abstraction used by
//! CG, and a few symmetric-matrix helpers built on nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// A symmetric linear map `v -> H v`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, v: &Vector) -> Vector;
}

impl LinearOperator for Matrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, v: &Vector) -> Vector {
        self * v
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, v: &Vector) -> Vector {
        (**self).apply(v)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, v: &Vector) -> Vector {
        (**self).apply(v)
    }
}

/// Wraps a closure as an operator.
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&Vector) -> Vector> FnOperator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&Vector) -> Vector> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &Vector) -> Vector {
        (self.f)(v)
    }
}

pub fn all_finite(v: &Vector) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn symmetric_spectral_norm(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let eig = SymmetricEigen::new(m.clone());
    eig.eigenvalues.iter().fold(0.0_f64, |acc, l| acc.max(l.abs()))
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn symmetric_extreme_eigenvalues(m: &Matrix) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Replaces every eigenvalue of the symmetric matrix `m` by its projection
/// onto `[lo, hi]`. The result is re-symmetrized to remove rounding skew.
pub fn clip_spectrum(m: &Matrix, lo: f64, hi: f64) -> Matrix {
    let eig = SymmetricEigen::new(m.clone());
    let clipped = eig.eigenvalues.map(|l| l.clamp(lo, hi));
    let q = &eig.eigenvectors;
    let out = q * Matrix::from_diagonal(&clipped) * q.transpose();
    symmetrize(&out)
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

pub fn standard_normal_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Uniformly distributed point on the unit sphere in `R^n`.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    loop {
        let v = standard_normal_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// signs of R's diagonal folded into Q).
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix {
    let g = Matrix::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random symmetric matrix scaled to spectral norm exactly `norm`
/// (up to rounding). Returns the zero matrix when `norm == 0`.
pub fn random_symmetric_with_norm<R: Rng + ?Sized>(rng: &mut R, n: usize, norm: f64) -> Matrix {
    if norm == 0.0 || n == 0 {
        return Matrix::zeros(n, n);
    }
    loop {
        let g = Matrix::from_fn(n, n, |_, _| rng.sample(StandardNormal));
        let s = symmetrize(&g);
        let current = symmetric_spectral_norm(&s);
        if current > 1e-12 {
            return s * (norm / current);
        }
    }
}
