use nalgebra::DMatrix;

use crate::error::{Error, Result};

use super::RealMatrix;

pub fn ensure_finite(m: &RealMatrix, name: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Argument(format!("{name} contains NaN or infinite entries")))
    }
}

pub fn ensure_square(m: &RealMatrix, name: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{name} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub fn ensure_same_shape(m: &RealMatrix, rows: usize, cols: usize, name: &str) -> Result<()> {
    if m.shape() == (rows, cols) {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "{name} must be {rows}x{cols}, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub fn frobenius(m: &RealMatrix) -> f64 {
    m.norm()
}

pub fn symmetrize(m: &RealMatrix) -> RealMatrix {
    (m + m.transpose()) * 0.5
}

/// Symmetry up to `tol` relative to the matrix magnitude.
pub fn is_symmetric(m: &RealMatrix, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).norm() <= tol * (1.0 + m.norm())
}

pub fn is_positive_semidefinite(m: &RealMatrix, tol: f64) -> bool {
    if !is_symmetric(m, tol) {
        return false;
    }
    if m.nrows() == 0 {
        return true;
    }
    let eig = symmetrize(m).symmetric_eigenvalues();
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    min >= -tol * (1.0 + m.norm())
}

pub fn is_positive_definite(m: &RealMatrix, tol: f64) -> bool {
    is_symmetric(m, tol) && symmetrize(m).cholesky().is_some()
}

pub fn singular_values(m: &RealMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.singular_values().iter().cloned().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `rel_tol` times the largest one.
pub fn numeric_rank(m: &RealMatrix, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        Some(&max) if max > 0.0 => sv.iter().filter(|&&s| s > rel_tol * max).count(),
        _ => 0,
    }
}

pub fn determinant(m: &RealMatrix) -> Result<f64> {
    ensure_square(m, "matrix")?;
    if m.nrows() == 0 {
        return Ok(1.0);
    }
    Ok(m.clone().determinant())
}

pub fn inverse(m: &RealMatrix, name: &str) -> Result<RealMatrix> {
    ensure_square(m, name)?;
    m.clone()
        .try_inverse()
        .filter(|inv| inv.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Numeric(format!("{name} is singular")))
}

/// Classical adjugate, computed entry by entry from cofactors.
///
/// Unlike `det(M) * M^-1` this stays well defined when `M` is singular or
/// nearly so.
pub fn adjugate(m: &RealMatrix) -> Result<RealMatrix> {
    ensure_square(m, "matrix")?;
    let n = m.nrows();
    if n == 1 {
        return Ok(DMatrix::from_element(1, 1, 1.0));
    }
    let mut adj = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let minor = m.clone().remove_row(i).remove_column(j);
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            adj[(j, i)] = sign * minor.determinant();
        }
    }
    Ok(adj)
}

/// Assemble a block matrix from rows of blocks.
///
/// Every block in a row must share its row count and every block column must
/// share its column count.
pub fn block(rows: &[&[&RealMatrix]]) -> Result<RealMatrix> {
    let Some(first) = rows.first() else {
        return Ok(DMatrix::zeros(0, 0));
    };
    let col_widths: Vec<usize> = first.iter().map(|b| b.ncols()).collect();
    let total_cols: usize = col_widths.iter().sum();
    let mut heights = Vec::with_capacity(rows.len());
    for (ri, row) in rows.iter().enumerate() {
        if row.len() != col_widths.len() {
            return Err(Error::Dimension(format!("block row {ri} has {} blocks", row.len())));
        }
        let h = row[0].nrows();
        for (ci, b) in row.iter().enumerate() {
            if b.nrows() != h || b.ncols() != col_widths[ci] {
                return Err(Error::Dimension(format!(
                    "block ({ri},{ci}) is {}x{}, expected {h}x{}",
                    b.nrows(),
                    b.ncols(),
                    col_widths[ci]
                )));
            }
        }
        heights.push(h);
    }
    let total_rows: usize = heights.iter().sum();
    let mut out = DMatrix::zeros(total_rows, total_cols);
    let mut r0 = 0;
    for (row, h) in rows.iter().zip(&heights) {
        let mut c0 = 0;
        for (b, w) in row.iter().zip(&col_widths) {
            out.view_mut((r0, c0), (*h, *w)).copy_from(b);
            c0 += w;
        }
        r0 += h;
    }
    Ok(out)
}
