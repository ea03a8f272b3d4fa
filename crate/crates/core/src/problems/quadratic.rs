use crate::cg::SpectrumBounds;
use crate::error::{invalid, Result};
use crate::linalg::{random_orthogonal, LinearOperator, Matrix, Vector};
use crate::rng::seeded;

use super::Problem;

/// `f(x) = 1/2 (x - shift)' A (x - shift)` with `A` symmetric positive
/// definite.
#[derive(Clone, Debug)]
pub struct QuadraticProblem {
    matrix: Matrix,
    shift: Vector,
    bounds: SpectrumBounds,
}

impl QuadraticProblem {
    /// `A = diag(spectrum)`.
    pub fn diagonal(spectrum: &[f64], shift: Vector) -> Result<Self> {
        let bounds = spectrum_bounds(spectrum)?;
        check_shift(spectrum.len(), &shift)?;
        let matrix = Matrix::from_diagonal(&Vector::from_column_slice(spectrum));
        Ok(Self { matrix, shift, bounds })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
}

/// Quadratic whose matrix is `Q diag(spectrum) Q'` for a Haar-random `Q`
/// drawn from `seed`.
pub fn make_quadratic(dimension: usize, spectrum: &[f64], shift: Vector, seed: u64) -> Result<QuadraticProblem> {
    if spectrum.len() != dimension {
        return Err(invalid(format!(
            "spectrum has {} entries for dimension {dimension}",
            spectrum.len()
        )));
    }
    let bounds = spectrum_bounds(spectrum)?;
    check_shift(dimension, &shift)?;
    let q = random_orthogonal(&mut seeded(seed), dimension);
    let d = Matrix::from_diagonal(&Vector::from_column_slice(spectrum));
    let a = &q * d * q.transpose();
    let matrix = (&a + a.transpose()) * 0.5;
    Ok(QuadraticProblem { matrix, shift, bounds })
}

/// `n` points geometrically spaced from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let ratio = (hi / lo).ln();
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        lo * (ratio * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

fn spectrum_bounds(spectrum: &[f64]) -> Result<SpectrumBounds> {
    if spectrum.is_empty() {
        return Err(invalid("empty spectrum"));
    }
    if let Some(bad) = spectrum.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(invalid(format!("spectrum entries must be positive, got {bad}")));
    }
    let lo = spectrum.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = spectrum.iter().cloned().fold(0.0, f64::max);
    SpectrumBounds::new(lo, hi)
}

fn check_shift(n: usize, shift: &Vector) -> Result<()> {
    if shift.len() != n {
        return Err(invalid(format!("shift has length {} for dimension {n}", shift.len())));
    }
    Ok(())
}

impl Problem for QuadraticProblem {
    fn dim(&self) -> usize {
        self.shift.len()
    }

    fn value(&self, x: &Vector) -> f64 {
        let d = x - &self.shift;
        0.5 * d.dot(&(&self.matrix * &d))
    }

    fn gradient(&self, x: &Vector) -> Vector {
        &self.matrix * (x - &self.shift)
    }

    fn hess_vec(&self, _x: &Vector, v: &Vector) -> Vector {
        &self.matrix * v
    }

    fn hessian(&self, _x: &Vector) -> Matrix {
        self.matrix.clone()
    }

    fn bounds(&self) -> SpectrumBounds {
        self.bounds
    }

    fn hessian_lipschitz(&self) -> f64 {
        0.0
    }

    fn minimizer(&self) -> Option<&Vector> {
        Some(&self.shift)
    }

    fn min_value(&self) -> Option<f64> {
        Some(0.0)
    }

    fn hessian_operator<'a>(&'a self, _x: &Vector) -> Box<dyn LinearOperator + 'a> {
        Box::new(&self.matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_example() {
        let p = QuadraticProblem::diagonal(&[1.0, 4.0], Vector::zeros(2)).unwrap();
        let e1 = Vector::from_vec(vec![1.0, 0.0]);
        assert_eq!(p.value(&e1), 0.5);
        assert_eq!(p.gradient(&e1), e1);
        assert_eq!(super::super::optimality_gap(&p, &e1).unwrap(), 0.5);
    }

    #[test]
    fn rejects_nonpositive_spectrum() {
        assert!(make_quadratic(2, &[0.0, 1.0], Vector::zeros(2), 1).is_err());
        assert!(make_quadratic(2, &[-1.0, 1.0], Vector::zeros(2), 1).is_err());
    }

    #[test]
    fn log_spacing_hits_endpoints() {
        let s = log_spaced(1.0, 4.0, 3);
        assert_eq!(s, vec![1.0, 2.0, 4.0]);
    }
}
