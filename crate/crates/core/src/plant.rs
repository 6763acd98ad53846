//! Plant and controller model: LTI definitions, zero-order-hold
//! discretization, steady-state LQG synthesis and the replay stealthiness
//! test on `Γ = (A + BK)(I - LC)`.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::matcore::{
    eigenvalues, ensure_finite, ensure_same_shape, ensure_square, inverse, is_positive_definite,
    is_positive_semidefinite, matrix_exponential, numeric_rank, singular_values, solve_dare, RealMatrix,
    RealVector, Spectrum,
};

/// Relative singular-value threshold for the Kalman rank tests.
pub const KALMAN_RANK_TOL: f64 = 1e-12;
/// Relative singular-value threshold for the PBH test on non-Schur modes.
pub const PBH_RANK_TOL: f64 = 1e-9;

const SYM_TOL: f64 = 1e-10;

/// Continuous-time LTI model `dx/dt = Ac x + Bc u`, `y = Cc x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPlant {
    pub a: RealMatrix,
    pub b: RealMatrix,
    pub c: RealMatrix,
}

impl ContinuousPlant {
    pub fn new(a: RealMatrix, b: RealMatrix, c: RealMatrix) -> Result<Self> {
        check_dynamics(&a, &b, &c)?;
        Ok(Self { a, b, c })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
}

/// Sampled dynamics `(A, B, C)` without the noise model.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDynamics {
    pub a: RealMatrix,
    pub b: RealMatrix,
    pub c: RealMatrix,
    pub ts: f64,
}

impl DiscreteDynamics {
    pub fn with_noise(self, q: RealMatrix, r: RealMatrix) -> Result<DiscretePlant> {
        DiscretePlant::new(self.a, self.b, self.c, q, r, self.ts)
    }
}

/// Discrete stochastic plant
/// `x(t+1) = A x(t) + B u(t) + w(t)`, `y(t) = C x(t) + v(t)`
/// with `w ~ N(0, Q)` and `v ~ N(0, R)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePlant {
    pub a: RealMatrix,
    pub b: RealMatrix,
    pub c: RealMatrix,
    pub q: RealMatrix,
    pub r: RealMatrix,
    /// Sample period in seconds; informational only.
    pub ts: f64,
}

impl DiscretePlant {
    pub fn new(a: RealMatrix, b: RealMatrix, c: RealMatrix, q: RealMatrix, r: RealMatrix, ts: f64) -> Result<Self> {
        check_dynamics(&a, &b, &c)?;
        let n = a.nrows();
        let p = c.nrows();
        ensure_same_shape(&q, n, n, "Q")?;
        ensure_same_shape(&r, p, p, "R")?;
        ensure_finite(&q, "Q")?;
        ensure_finite(&r, "R")?;
        if !is_positive_semidefinite(&q, SYM_TOL) {
            return Err(Error::Argument("process noise covariance Q must be symmetric PSD".into()));
        }
        if !is_positive_definite(&r, SYM_TOL) {
            return Err(Error::Argument("measurement noise covariance R must be symmetric PD".into()));
        }
        if !(ts.is_finite() && ts > 0.0) {
            return Err(Error::Argument(format!("sample period must be positive, got {ts}")));
        }
        Ok(Self { a, b, c, q, r, ts })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }
}

/// LQG cost weights: `x'Wx + u'Uu`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    pub w: RealMatrix,
    pub u: RealMatrix,
}

impl CostWeights {
    pub fn new(w: RealMatrix, u: RealMatrix) -> Result<Self> {
        ensure_square(&w, "W")?;
        ensure_square(&u, "U")?;
        ensure_finite(&w, "W")?;
        ensure_finite(&u, "U")?;
        if !is_positive_semidefinite(&w, SYM_TOL) {
            return Err(Error::Argument("state weight W must be symmetric PSD".into()));
        }
        if !is_positive_definite(&u, SYM_TOL) {
            return Err(Error::Argument("input weight U must be symmetric PD".into()));
        }
        Ok(Self { w, u })
    }

    pub fn identity(n: usize, m: usize) -> Self {
        Self {
            w: DMatrix::identity(n, n),
            u: DMatrix::identity(m, m),
        }
    }
}

/// Gaussian initial state `x(0) ~ N(mean, cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub mean: RealVector,
    pub cov: RealMatrix,
}

impl InitialState {
    pub fn new(mean: RealVector, cov: RealMatrix) -> Result<Self> {
        let n = mean.len();
        ensure_same_shape(&cov, n, n, "initial covariance")?;
        if !mean.iter().all(|v| v.is_finite()) {
            return Err(Error::Argument("initial mean is not finite".into()));
        }
        if !is_positive_semidefinite(&cov, SYM_TOL) {
            return Err(Error::Argument("initial covariance must be symmetric PSD".into()));
        }
        Ok(Self { mean, cov })
    }

    /// Deterministic start at the origin.
    pub fn zero(n: usize) -> Self {
        Self {
            mean: RealVector::zeros(n),
            cov: DMatrix::zeros(n, n),
        }
    }
}

/// Steady-state LQG controller and Kalman filter for a [`DiscretePlant`].
#[derive(Debug, Clone, PartialEq)]
pub struct LqgSynthesis {
    /// Control Riccati solution.
    pub p: RealMatrix,
    /// LQR gain, `u = K x̂`.
    pub k: RealMatrix,
    /// Filter Riccati solution (prior error covariance).
    pub sigma_e: RealMatrix,
    /// Kalman gain.
    pub l: RealMatrix,
    /// Innovation covariance `C Σe C' + R`.
    pub h: RealMatrix,
    /// `(A + BK)(I - LC)`.
    pub gamma: RealMatrix,
}

impl LqgSynthesis {
    /// `A + BK`
    pub fn controller_loop(&self, plant: &DiscretePlant) -> RealMatrix {
        &plant.a + &plant.b * &self.k
    }

    /// `(I - LC) A`
    pub fn estimator_loop(&self, plant: &DiscretePlant) -> RealMatrix {
        self.i_minus_lc(plant) * &plant.a
    }

    pub fn i_minus_lc(&self, plant: &DiscretePlant) -> RealMatrix {
        let n = plant.state_dim();
        DMatrix::identity(n, n) - &self.l * &plant.c
    }
}

/// Zero-order-hold discretization using the augmented exponential
/// `exp([[Ac, Bc], [0, 0]] Ts) = [[A, B], [0, I]]`.
pub fn discretize_zoh(plant: &ContinuousPlant, ts: f64) -> Result<DiscreteDynamics> {
    if !(ts.is_finite() && ts > 0.0) {
        return Err(Error::Argument(format!("sample period must be positive, got {ts}")));
    }
    let n = plant.a.nrows();
    let m = plant.b.ncols();
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(&(&plant.a * ts));
    aug.view_mut((0, n), (n, m)).copy_from(&(&plant.b * ts));
    let e = matrix_exponential(&aug)?;
    Ok(DiscreteDynamics {
        a: e.view((0, 0), (n, n)).into_owned(),
        b: e.view((0, n), (n, m)).into_owned(),
        c: plant.c.clone(),
        ts,
    })
}

/// Kalman controllability matrix `[B, AB, ..., A^{n-1}B]`.
pub fn controllability_matrix(a: &RealMatrix, b: &RealMatrix) -> RealMatrix {
    let n = a.nrows();
    let m = b.ncols();
    let mut out = DMatrix::zeros(n, n * m);
    let mut blk = b.clone();
    for i in 0..n {
        out.view_mut((0, i * m), (n, m)).copy_from(&blk);
        blk = a * blk;
    }
    out
}

/// Kalman observability matrix `[C; CA; ...; CA^{n-1}]`.
pub fn observability_matrix(a: &RealMatrix, c: &RealMatrix) -> RealMatrix {
    controllability_matrix(&a.transpose(), &c.transpose()).transpose()
}

/// PBH test of `[A - λI, B]` at every eigenvalue with `|λ| ≥ 1`.
fn pbh_stabilizable(a: &RealMatrix, b: &RealMatrix) -> Result<bool> {
    let n = a.nrows();
    let m = b.ncols();
    for lambda in eigenvalues(a)?.eigenvalues {
        if lambda.norm() < 1.0 {
            continue;
        }
        let mut pencil = DMatrix::<Complex<f64>>::zeros(n, n + m);
        for i in 0..n {
            for j in 0..n {
                pencil[(i, j)] = Complex::new(a[(i, j)], 0.0);
            }
            pencil[(i, i)] -= lambda;
            for j in 0..m {
                pencil[(i, n + j)] = Complex::new(b[(i, j)], 0.0);
            }
        }
        let sv = pencil.singular_values();
        let max = sv.max();
        let min = sv.min();
        if max == 0.0 || min <= PBH_RANK_TOL * max {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Steady-state LQG synthesis.
///
/// Fails with [`Error::Synthesis`] when a rank test fails; the message names
/// the test.
pub fn synthesize_lqg(plant: &DiscretePlant, weights: &CostWeights) -> Result<LqgSynthesis> {
    let n = plant.state_dim();
    let m = plant.input_dim();
    let p = plant.output_dim();
    ensure_same_shape(&weights.w, n, n, "W")?;
    ensure_same_shape(&weights.u, m, m, "U")?;

    let ctrb = controllability_matrix(&plant.a, &plant.b);
    let rank_c = numeric_rank(&ctrb, KALMAN_RANK_TOL);
    if rank_c < n {
        return Err(Error::Synthesis(format!(
            "controllability rank test failed: rank {rank_c} < {n}"
        )));
    }
    let obsv = observability_matrix(&plant.a, &plant.c);
    let rank_o = numeric_rank(&obsv, KALMAN_RANK_TOL);
    if rank_o < n {
        return Err(Error::Synthesis(format!(
            "observability rank test failed: rank {rank_o} < {n}"
        )));
    }
    if !pbh_stabilizable(&plant.a, &plant.b)? {
        return Err(Error::Synthesis(
            "stabilizability (PBH) rank test failed on a non-Schur mode".into(),
        ));
    }
    if !pbh_stabilizable(&plant.a.transpose(), &plant.c.transpose())? {
        return Err(Error::Synthesis(
            "detectability (PBH) rank test failed on a non-Schur mode".into(),
        ));
    }

    let a = &plant.a;
    let b = &plant.b;
    let c = &plant.c;

    let pm = solve_dare(a, b, &weights.w, &weights.u)?;
    let s = b.transpose() * &pm * b + &weights.u;
    let k = -inverse(&s, "B'PB + U")? * b.transpose() * &pm * a;

    let sigma_e = solve_dare(&a.transpose(), &c.transpose(), &plant.q, &plant.r)?;
    let h = crate::matcore::symmetrize(&(c * &sigma_e * c.transpose() + &plant.r));
    let l = &sigma_e * c.transpose() * inverse(&h, "innovation covariance")?;

    let eye = DMatrix::identity(n, n);
    let gamma = (a + b * &k) * (&eye - &l * c);

    let out = LqgSynthesis {
        p: pm,
        k,
        sigma_e,
        l,
        h,
        gamma,
    };

    let rho_ctrl = eigenvalues(&out.controller_loop(plant))?.spectral_radius;
    if rho_ctrl >= 1.0 {
        return Err(Error::Synthesis(format!("A + BK is not Schur (radius {rho_ctrl})")));
    }
    let rho_est = eigenvalues(&out.estimator_loop(plant))?.spectral_radius;
    if rho_est >= 1.0 {
        return Err(Error::Synthesis(format!("(I - LC)A is not Schur (radius {rho_est})")));
    }
    if !is_positive_definite(&out.h, SYM_TOL) || out.h.shape() != (p, p) {
        return Err(Error::Synthesis("innovation covariance is not positive definite".into()));
    }
    Ok(out)
}

/// Verdict of the replay stealthiness test.
#[derive(Debug, Clone, PartialEq)]
pub struct StealthReport {
    /// True when `Γ` is Schur: a replayed output drives the residue back to
    /// its nominal distribution, so no unwatermarked detector can see it.
    pub stealthy: bool,
    pub gamma_spectrum: Spectrum,
}

pub fn replay_stealthy(synthesis: &LqgSynthesis) -> Result<StealthReport> {
    let gamma_spectrum = eigenvalues(&synthesis.gamma)?;
    Ok(StealthReport {
        stealthy: gamma_spectrum.spectral_radius < 1.0,
        gamma_spectrum,
    })
}

/// Smallest-to-largest singular value ratio.
pub fn condition_ratio(m: &RealMatrix) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&max), Some(&min)) if max > 0.0 => min / max,
        _ => 0.0,
    }
}

fn check_dynamics(a: &RealMatrix, b: &RealMatrix, c: &RealMatrix) -> Result<()> {
    ensure_square(a, "A")?;
    let n = a.nrows();
    if n == 0 {
        return Err(Error::Dimension("state dimension must be at least 1".into()));
    }
    if b.nrows() != n || b.ncols() == 0 {
        return Err(Error::Dimension(format!(
            "B must be {n}xm with m >= 1, got {}x{}",
            b.nrows(),
            b.ncols()
        )));
    }
    if c.ncols() != n || c.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "C must be px{n} with p >= 1, got {}x{}",
            c.nrows(),
            c.ncols()
        )));
    }
    ensure_finite(a, "A")?;
    ensure_finite(b, "B")?;
    ensure_finite(c, "C")
}
