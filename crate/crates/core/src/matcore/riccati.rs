use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::eigen::spectral_radius;
use super::linalg::{
    ensure_finite, ensure_same_shape, ensure_square, inverse, is_positive_definite, is_positive_semidefinite,
    symmetrize,
};
use super::RealMatrix;

const MAX_DOUBLINGS: usize = 64;
const MAX_RECURSION_STEPS: usize = 100_000;
const RESIDUAL_TOL: f64 = 1e-10;

/// One step of the Riccati recursion
/// `X -> A'XA + Q - A'XB (B'XB + R)^-1 B'XA`.
pub fn riccati_map(
    a: &RealMatrix,
    b: &RealMatrix,
    q: &RealMatrix,
    r: &RealMatrix,
    x: &RealMatrix,
) -> Result<RealMatrix> {
    let at = a.transpose();
    let xa = x * a;
    let bt_xa = b.transpose() * &xa;
    let s = b.transpose() * x * b + r;
    let gain = s
        .cholesky()
        .ok_or_else(|| Error::Numeric("B'XB + R lost positive definiteness".into()))?
        .solve(&bt_xa);
    Ok(symmetrize(&(&at * &xa + q - bt_xa.transpose() * gain)))
}

/// Frobenius norm of `X - f(X)` for the Riccati map `f`.
pub fn riccati_residual(
    a: &RealMatrix,
    b: &RealMatrix,
    q: &RealMatrix,
    r: &RealMatrix,
    x: &RealMatrix,
) -> Result<f64> {
    Ok((x - riccati_map(a, b, q, r, x)?).norm())
}

/// Stabilizing solution of the discrete algebraic Riccati equation
/// `X = A'XA + Q - A'XB (B'XB + R)^-1 B'XA`.
///
/// The filter equation is the same problem with `(A', C', Q, R)`.
///
/// The recursion is accelerated by doubling (each sweep advances the
/// recursion by a power of two); if doubling breaks down the plain
/// recursion is iterated instead. The result is accepted only when the
/// fixed-point residual is below `1e-10 (1 + |X|)` and `A + BK` is Schur.
pub fn solve_dare(a: &RealMatrix, b: &RealMatrix, q: &RealMatrix, r: &RealMatrix) -> Result<RealMatrix> {
    ensure_square(a, "A")?;
    let n = a.nrows();
    if b.nrows() != n {
        return Err(Error::Dimension(format!("B must have {n} rows, got {}", b.nrows())));
    }
    let m = b.ncols();
    ensure_same_shape(q, n, n, "Q")?;
    ensure_same_shape(r, m, m, "R")?;
    for (mat, name) in [(a, "A"), (b, "B"), (q, "Q"), (r, "R")] {
        ensure_finite(mat, name)?;
    }
    if !is_positive_semidefinite(q, 1e-10) {
        return Err(Error::Argument("state weight must be symmetric positive semidefinite".into()));
    }
    if !is_positive_definite(r, 1e-10) {
        return Err(Error::Argument("input weight must be symmetric positive definite".into()));
    }

    let x = match doubling(a, b, q, r) {
        Some(x) if accept(a, b, q, r, &x)? => x,
        _ => recursion(a, b, q, r)?,
    };

    let cl = closed_loop(a, b, r, &x)?;
    let rho = spectral_radius(&cl)?;
    if rho >= 1.0 {
        return Err(Error::Numeric(format!(
            "Riccati solution is not stabilizing (closed-loop spectral radius {rho:.6})"
        )));
    }
    if !is_positive_semidefinite(&x, 1e-8) {
        return Err(Error::Numeric("Riccati solution is not positive semidefinite".into()));
    }
    Ok(x)
}

fn accept(a: &RealMatrix, b: &RealMatrix, q: &RealMatrix, r: &RealMatrix, x: &RealMatrix) -> Result<bool> {
    if !x.iter().all(|v| v.is_finite()) {
        return Ok(false);
    }
    Ok(riccati_residual(a, b, q, r, x)? <= RESIDUAL_TOL * (1.0 + x.norm()))
}

fn closed_loop(a: &RealMatrix, b: &RealMatrix, r: &RealMatrix, x: &RealMatrix) -> Result<RealMatrix> {
    let s = b.transpose() * x * b + r;
    let k = -inverse(&s, "B'XB + R")? * b.transpose() * x * a;
    Ok(a + b * k)
}

/// Structure-preserving doubling. Returns `None` on breakdown.
fn doubling(a: &RealMatrix, b: &RealMatrix, q: &RealMatrix, r: &RealMatrix) -> Option<RealMatrix> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let r_inv = r.clone().try_inverse()?;
    let mut ak = a.clone();
    let mut gk = symmetrize(&(b * r_inv * b.transpose()));
    let mut hk = q.clone();
    for _ in 0..MAX_DOUBLINGS {
        let w = (&eye + &gk * &hk).lu();
        let w_a = w.solve(&ak)?;
        let w_g = w.solve(&gk)?;
        let a_next = &ak * &w_a;
        let g_next = symmetrize(&(&gk + &ak * &w_g * ak.transpose()));
        let h_next = symmetrize(&(&hk + ak.transpose() * &hk * &w_a));
        if !h_next.iter().all(|v| v.is_finite()) {
            return None;
        }
        let step = (&h_next - &hk).norm();
        ak = a_next;
        gk = g_next;
        hk = h_next;
        if step <= 1e-15 * (1.0 + hk.norm()) {
            break;
        }
    }
    Some(hk)
}

fn recursion(a: &RealMatrix, b: &RealMatrix, q: &RealMatrix, r: &RealMatrix) -> Result<RealMatrix> {
    let mut x = q.clone();
    for _ in 0..MAX_RECURSION_STEPS {
        let next = riccati_map(a, b, q, r, &x)?;
        let step = (&next - &x).norm();
        x = next;
        if !x.iter().all(|v| v.is_finite()) {
            break;
        }
        if step <= RESIDUAL_TOL * (1.0 + x.norm()) {
            return Ok(x);
        }
    }
    Err(Error::Numeric(format!(
        "Riccati recursion did not converge within {MAX_RECURSION_STEPS} iterations (is the pair stabilizable?)"
    )))
}
