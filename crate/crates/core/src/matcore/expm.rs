use crate::error::{Error, Result};

use super::linalg::{ensure_finite, ensure_square};
use super::RealMatrix;

/// Matrix exponential by Padé scaling and squaring.
pub fn matrix_exponential(m: &RealMatrix) -> Result<RealMatrix> {
    ensure_square(m, "matrix")?;
    ensure_finite(m, "matrix")?;
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    let e = m.exp();
    if e.iter().all(|v| v.is_finite()) {
        Ok(e)
    } else {
        Err(Error::Numeric(format!(
            "matrix exponential overflowed (input norm {:.3e})",
            m.norm()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn rel_err(a: &RealMatrix, b: &RealMatrix) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn zero_gives_identity() {
        let e = matrix_exponential(&RealMatrix::zeros(3, 3)).unwrap();
        assert_eq!(e, RealMatrix::identity(3, 3));
    }

    #[test]
    fn diagonal() {
        let e = matrix_exponential(&dmatrix![0.7, 0.0; 0.0, -2.3]).unwrap();
        assert!(rel_err(&e, &dmatrix![0.7f64.exp(), 0.0; 0.0, (-2.3f64).exp()]) < 1e-13);
    }

    #[test]
    fn nilpotent_series_terminates() {
        let e = matrix_exponential(&dmatrix![0.0, 1.0; 0.0, 0.0]).unwrap();
        assert!(rel_err(&e, &dmatrix![1.0, 1.0; 0.0, 1.0]) < 1e-14);
    }

    #[test]
    fn rotation_generator() {
        let t = 0.9;
        let e = matrix_exponential(&dmatrix![0.0, -t; t, 0.0]).unwrap();
        let expected = dmatrix![t.cos(), -t.sin(); t.sin(), t.cos()];
        assert!(rel_err(&e, &expected) < 1e-13);
    }

    #[test]
    fn matches_long_taylor_series() {
        let m = dmatrix![0.1, -0.4, 0.2; 0.3, -0.5, 0.05; -0.2, 0.1, 0.25];
        let mut term = RealMatrix::identity(3, 3);
        let mut sum = term.clone();
        for k in 1..60 {
            term = &term * &m / k as f64;
            sum += &term;
        }
        assert!(rel_err(&matrix_exponential(&m).unwrap(), &sum) < 1e-12);
    }
}
