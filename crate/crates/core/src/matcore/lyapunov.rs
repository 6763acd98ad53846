use crate::error::{Error, Result};

use super::eigen::spectral_radius;
use super::linalg::{ensure_finite, ensure_same_shape, ensure_square, is_symmetric, symmetrize};
use super::RealMatrix;

const MAX_DOUBLINGS: usize = 80;
const RESIDUAL_TOL: f64 = 1e-10;

/// Solves `X = F X F' + V` for Schur `F` by Smith doubling.
pub fn solve_dlyap(f: &RealMatrix, v: &RealMatrix) -> Result<RealMatrix> {
    ensure_square(f, "F")?;
    let n = f.nrows();
    ensure_same_shape(v, n, n, "V")?;
    ensure_finite(f, "F")?;
    ensure_finite(v, "V")?;
    if !is_symmetric(v, 1e-10) {
        return Err(Error::Argument("Lyapunov forcing term must be symmetric".into()));
    }
    let rho = spectral_radius(f)?;
    if rho >= 1.0 {
        return Err(Error::Domain(format!(
            "Lyapunov equation needs a Schur matrix, spectral radius is {rho:.9}"
        )));
    }

    // X_k = sum_{j < 2^k} F^j V F'^j
    let mut x = symmetrize(v);
    let mut fk = f.clone();
    for _ in 0..MAX_DOUBLINGS {
        let inc = symmetrize(&(&fk * &x * fk.transpose()));
        x += &inc;
        fk = &fk * &fk;
        if !x.iter().all(|e| e.is_finite()) {
            return Err(Error::Numeric("Lyapunov doubling overflowed".into()));
        }
        if inc.norm() <= 1e-17 * (1.0 + x.norm()) && fk.norm() < 1e-3 {
            break;
        }
    }

    // A couple of contraction sweeps clean up roundoff from the doubling.
    for _ in 0..2 {
        x = symmetrize(&(f * &x * f.transpose() + v));
    }
    let residual = (&x - (f * &x * f.transpose() + v)).norm();
    if residual > RESIDUAL_TOL * (1.0 + x.norm()) {
        return Err(Error::Numeric(format!(
            "Lyapunov residual {residual:.3e} too large (spectral radius {rho:.9})"
        )));
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::is_positive_semidefinite;
    use nalgebra::dmatrix;

    #[test]
    fn zero_dynamics() {
        let v = dmatrix![2.0, 0.5; 0.5, 1.0];
        let x = solve_dlyap(&RealMatrix::zeros(2, 2), &v).unwrap();
        assert!((x - v).norm() < 1e-15);
    }

    #[test]
    fn scalar_geometric_series() {
        let x = solve_dlyap(&dmatrix![0.5], &dmatrix![1.0]).unwrap();
        assert!((x[(0, 0)] - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_unstable() {
        let err = solve_dlyap(&dmatrix![1.0, 0.2; 0.0, 0.3], &RealMatrix::identity(2, 2)).unwrap_err();
        match err {
            Error::Domain(msg) => assert!(msg.contains("1.000000000"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn slow_nonnormal_dynamics() {
        let f = dmatrix![0.995, 5.0; 0.0, 0.99];
        let v = dmatrix![1.0, 0.0; 0.0, 0.2];
        let x = solve_dlyap(&f, &v).unwrap();
        assert!((&x - (&f * &x * f.transpose() + &v)).norm() <= 1e-10 * (1.0 + x.norm()));
        assert!(is_positive_semidefinite(&x, 1e-10));
    }
}
