//! Dense numerical kernels shared by every other module.
//!
//! Everything here operates on small `DMatrix<f64>` values (a few dozen rows at
//! most) and is a pure function of its inputs.

mod chi2;
mod eigen;
mod expm;
mod linalg;
mod lyapunov;
mod riccati;

pub use chi2::{chi2_quantile, chi2_survival, ln_gamma, regularized_gamma_q};
pub use eigen::{eigenvalues, is_schur, spectral_radius, Spectrum};
pub use expm::matrix_exponential;
pub use linalg::{
    adjugate, block, determinant, ensure_finite, ensure_same_shape, ensure_square, frobenius, inverse,
    is_positive_definite, is_positive_semidefinite, is_symmetric, numeric_rank, singular_values, symmetrize,
};
pub use lyapunov::solve_dlyap;
pub use riccati::{riccati_map, riccati_residual, solve_dare};

/// Dense real matrix used for every model quantity.
pub type RealMatrix = nalgebra::DMatrix<f64>;
/// Dense real column vector.
pub type RealVector = nalgebra::DVector<f64>;
