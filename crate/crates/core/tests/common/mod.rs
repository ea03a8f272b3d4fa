#![allow(dead_code)]

use ncg_core::linalg::{random_orthogonal, Matrix, Vector};
use ncg_core::rng::seeded;
use rand::Rng;

/// Random SPD matrix `Q diag(eigs) Q'` with eigenvalues drawn uniformly from
/// `[lo, hi]`; the extreme eigenvalues are pinned to the endpoints.
pub fn random_spd(n: usize, lo: f64, hi: f64, seed: u64) -> Matrix {
    let mut rng = seeded(seed);
    let mut eigs: Vec<f64> = (0..n).map(|_| rng.random_range(lo..=hi)).collect();
    eigs[0] = lo;
    if n > 1 {
        eigs[n - 1] = hi;
    }
    let q = random_orthogonal(&mut rng, n);
    let a = &q * Matrix::from_diagonal(&Vector::from_vec(eigs)) * q.transpose();
    (&a + a.transpose()) * 0.5
}

pub fn random_vector(n: usize, seed: u64) -> Vector {
    let mut rng = seeded(seed);
    Vector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}
