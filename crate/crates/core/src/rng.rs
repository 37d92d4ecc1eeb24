//! Seeded random sampling shared by the instance generators and checks.
//!
//! Every sweep cell gets its own ChaCha stream keyed by `(seed, cell)`, so
//! results never depend on the order in which cells are evaluated.

use nalgebra::QR;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Matrix, Vector};

pub type CellRng = ChaCha8Rng;

/// Generator for cell `cell` of a run seeded with `seed`.
pub fn cell_rng(seed: u64, cell: u64) -> CellRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell);
    rng
}

pub fn normal_vector<R: Rng>(rng: &mut R, dim: usize) -> Vector {
    Vector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

pub fn normal_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with the
/// sign of `R`'s diagonal folded into `Q`).
pub fn orthogonal_matrix<R: Rng>(rng: &mut R, dim: usize) -> Matrix {
    let qr = QR::new(normal_matrix(rng, dim, dim));
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random skew-symmetric matrix with Gaussian entries.
pub fn skew_matrix<R: Rng>(rng: &mut R, dim: usize) -> Matrix {
    let g = normal_matrix(rng, dim, dim);
    (&g - g.transpose()) * 0.5
}

/// Uniform draw from the open interval `(lo, hi)`.
pub fn open_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    loop {
        let v = rng.gen_range(lo..hi);
        if v > lo {
            return v;
        }
    }
}

/// Uniform draw from the half-open interval `(lo, hi]`.
pub fn left_open_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    hi - rng.gen_range(0.0..(hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_of_order() {
        let a: Vec<f64> = (0..3)
            .map(|c| normal_vector(&mut cell_rng(7, c), 2)[0])
            .collect();
        let b: Vec<f64> = (0..3)
            .rev()
            .map(|c| normal_vector(&mut cell_rng(7, c), 2)[0])
            .collect();
        assert_eq!(a, b.into_iter().rev().collect::<Vec<_>>());
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn orthogonal_is_orthogonal() {
        let q = orthogonal_matrix(&mut cell_rng(1, 0), 5);
        assert!((q.transpose() * &q - Matrix::identity(5, 5)).amax() < 1e-12);
    }

    #[test]
    fn open_intervals_exclude_endpoints() {
        let mut rng = cell_rng(3, 0);
        for _ in 0..1000 {
            let v = open_uniform(&mut rng, 0.0, 1.0);
            assert!(v > 0.0 && v < 1.0);
            let u = left_open_uniform(&mut rng, 0.0, 1.0);
            assert!(u > 0.0 && u <= 1.0);
        }
    }
}
