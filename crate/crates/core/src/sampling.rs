//! Seeded Gaussian sampling shared by the simulator and the optimizer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matcore::{RealMatrix, RealVector};

/// Independent stream for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Box–Muller pair generator; the second deviate is cached.
#[derive(Debug, Clone)]
pub struct Gaussian {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl Gaussian {
    pub fn new(rng: ChaCha8Rng) -> Self {
        Self { rng, spare: None }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite
        let u1: f64 = 1.0 - self.rng.random::<f64>();
        let u2: f64 = self.rng.random::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }

    pub fn vector(&mut self, len: usize) -> RealVector {
        RealVector::from_fn(len, |_, _| self.sample())
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> RealMatrix {
        // row-major fill so the draw order follows the written layout
        let mut m = RealMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self.sample();
            }
        }
        m
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }
}

/// Symmetric square root `S` with `S S' = cov`, from the eigendecomposition
/// (negative roundoff eigenvalues are clipped to zero, so PSD covariances
/// with zero directions are accepted).
pub fn covariance_factor(cov: &RealMatrix) -> RealMatrix {
    if cov.nrows() == 0 {
        return cov.clone();
    }
    let eig = crate::matcore::symmetrize(cov).symmetric_eigen();
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * RealMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn same_seed_same_draws() {
        let mut a = Gaussian::new(stream(7, 3));
        let mut b = Gaussian::new(stream(7, 3));
        for _ in 0..100 {
            assert_eq!(a.sample().to_bits(), b.sample().to_bits());
        }
    }

    #[test]
    fn streams_differ() {
        let mut a = Gaussian::new(stream(7, 3));
        let mut b = Gaussian::new(stream(7, 4));
        assert_ne!(a.sample(), b.sample());
    }

    #[test]
    fn moments() {
        let mut g = Gaussian::new(stream(1, 0));
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| g.sample()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "{mean}");
        assert!((var - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn factor_squares_back() {
        let cov = dmatrix![4.0, 1.0, 0.0; 1.0, 3.0, 0.5; 0.0, 0.5, 2.0];
        let s = covariance_factor(&cov);
        assert!((&s * s.transpose() - cov).norm() < 1e-12);
        let singular = dmatrix![1.0, 1.0; 1.0, 1.0];
        let s = covariance_factor(&singular);
        assert!((&s * s.transpose() - singular).norm() < 1e-12);
    }
}
