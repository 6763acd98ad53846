use nalgebra::linalg::Schur;
use nalgebra::Complex;

use crate::error::{Error, Result};

use super::linalg::{ensure_finite, ensure_square};
use super::RealMatrix;

const SCHUR_MAX_ITER: usize = 10_000;
/// Moduli closer than this (relative) are ordered by angle instead.
const MODULUS_TIE: f64 = 1e-10;

/// Eigenvalues of a real square matrix, sorted by modulus (descending) and
/// then by angle (ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex<f64>>,
    pub spectral_radius: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.norm()).collect()
    }

    /// All eigenvalues strictly inside the unit circle.
    pub fn is_schur(&self) -> bool {
        self.spectral_radius < 1.0
    }
}

pub fn eigenvalues(m: &RealMatrix) -> Result<Spectrum> {
    ensure_square(m, "matrix")?;
    ensure_finite(m, "matrix")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Spectrum {
            eigenvalues: Vec::new(),
            spectral_radius: 0.0,
        });
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or_else(|| {
        Error::Numeric(format!(
            "real Schur iteration did not converge within {SCHUR_MAX_ITER} sweeps for a {n}x{n} matrix (norm {:.3e})",
            m.norm()
        ))
    })?;
    let mut eigenvalues: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().cloned().collect();
    if eigenvalues.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("non-finite eigenvalue".into()));
    }
    sort_spectrum(&mut eigenvalues);
    let spectral_radius = eigenvalues.first().map_or(0.0, |z| z.norm());
    Ok(Spectrum {
        eigenvalues,
        spectral_radius,
    })
}

fn sort_spectrum(values: &mut [Complex<f64>]) {
    values.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    // Conjugate pairs and repeated roots differ in modulus only by roundoff;
    // order each such cluster by angle so the output is reproducible.
    let mut start = 0;
    while start < values.len() {
        let head = values[start].norm();
        let mut end = start + 1;
        while end < values.len() && (head - values[end].norm()) <= MODULUS_TIE * (1.0 + head) {
            end += 1;
        }
        values[start..end].sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        start = end;
    }
}

pub fn spectral_radius(m: &RealMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?.spectral_radius)
}

pub fn is_schur(m: &RealMatrix) -> Result<bool> {
    Ok(spectral_radius(m)? < 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn identity_spectrum() {
        let s = eigenvalues(&RealMatrix::identity(3, 3)).unwrap();
        assert_eq!(s.len(), 3);
        for z in &s.eigenvalues {
            assert!((z - Complex::new(1.0, 0.0)).norm() < 1e-14);
        }
        assert!((s.spectral_radius - 1.0).abs() < 1e-14);
    }

    #[test]
    fn golden_ratio_companion() {
        // z^2 - z - 1
        let m = dmatrix![1.0, 1.0; 1.0, 0.0];
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let s = eigenvalues(&m).unwrap();
        assert!((s.spectral_radius - phi).abs() < 1e-12);
        assert!((s.eigenvalues[1].re - (1.0 - phi)).abs() < 1e-12);
    }

    #[test]
    fn reference_detector_matrix_is_schur() {
        let a = dmatrix![0.48, -0.81, 0.02; 0.01, 0.61, -0.92; 0.89, 0.73, -0.9];
        let s = eigenvalues(&a).unwrap();
        assert!(s.spectral_radius < 1.0, "radius {}", s.spectral_radius);
    }

    #[test]
    fn conjugate_pair_orders_by_angle() {
        let m = dmatrix![0.0, -1.0; 1.0, 0.0];
        let s = eigenvalues(&m).unwrap();
        assert!(s.eigenvalues[0].im < 0.0 && s.eigenvalues[1].im > 0.0);
    }

    #[test]
    fn rejects_non_square_and_nan() {
        assert!(matches!(eigenvalues(&RealMatrix::zeros(2, 3)), Err(Error::Dimension(_))));
        let mut m = RealMatrix::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(eigenvalues(&m), Err(Error::Argument(_))));
    }
}
