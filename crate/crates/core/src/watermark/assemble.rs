use crate::error::{Error, Result};
use crate::matcore::{
    block, ensure_finite, ensure_square, eigenvalues, singular_values, RealMatrix, Spectrum,
};
use crate::plant::{CostWeights, DiscretePlant, LqgSynthesis};

/// Relative singular-value floor for the "full rank" requirement on `Ã`.
pub const FULL_RANK_TOL: f64 = 1e-8;

/// Smallest singular value is positive and at least `FULL_RANK_TOL` times
/// the largest.
pub(crate) fn full_rank(a: &RealMatrix) -> bool {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&max), Some(&min)) => min > 0.0 && min >= FULL_RANK_TOL * max,
        _ => true,
    }
}

/// Watermark generator matrices `(Ã, M̃, K̃)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicDetectorDesign {
    pub a: RealMatrix,
    pub m: RealMatrix,
    pub k: RealMatrix,
}

impl DynamicDetectorDesign {
    /// Checks shapes and finiteness only; stability is checked by
    /// [`DynamicDetectorDesign::is_admissible`].
    pub fn new(a: RealMatrix, m: RealMatrix, k: RealMatrix) -> Result<Self> {
        ensure_square(&a, "Ã")?;
        let nz = a.nrows();
        if m.nrows() != nz {
            return Err(Error::Dimension(format!("M̃ must have {nz} rows, got {}", m.nrows())));
        }
        if k.ncols() != nz {
            return Err(Error::Dimension(format!("K̃ must have {nz} columns, got {}", k.ncols())));
        }
        for (mat, name) in [(&a, "Ã"), (&m, "M̃"), (&k, "K̃")] {
            ensure_finite(mat, name)?;
        }
        Ok(Self { a, m, k })
    }

    /// All-zero design of the given detector order; reproduces plain LQG.
    pub fn zero(n_zeta: usize, outputs: usize, inputs: usize) -> Self {
        Self {
            a: RealMatrix::zeros(n_zeta, n_zeta),
            m: RealMatrix::zeros(n_zeta, outputs),
            k: RealMatrix::zeros(inputs, n_zeta),
        }
    }

    pub fn n_zeta(&self) -> usize {
        self.a.nrows()
    }

    /// Shapes agree with the plant's output and input dimensions.
    pub fn check_against(&self, plant: &DiscretePlant) -> Result<()> {
        if self.m.ncols() != plant.output_dim() {
            return Err(Error::Argument(format!(
                "M̃ must have {} columns (plant outputs), got {}",
                plant.output_dim(),
                self.m.ncols()
            )));
        }
        if self.k.nrows() != plant.input_dim() {
            return Err(Error::Argument(format!(
                "K̃ must have {} rows (plant inputs), got {}",
                plant.input_dim(),
                self.k.nrows()
            )));
        }
        Ok(())
    }

    /// `Ã` is Schur and numerically full rank.
    pub fn is_admissible(&self) -> Result<bool> {
        if self.n_zeta() == 0 {
            return Ok(true);
        }
        if eigenvalues(&self.a)?.spectral_radius >= 1.0 {
            return Ok(false);
        }
        Ok(full_rank(&self.a))
    }
}

/// Closed-loop, detection, noise and cost matrices for one design.
///
/// The augmented state is `x̃ = (x, ζ, e)` with `e = x - x̂(t)` the filtered
/// estimation error.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledMatrices {
    /// `[[A+BK, BK̃, -BK], [0, Ã, M̃C], [0, 0, (I-LC)A]]`
    pub theta: RealMatrix,
    /// `[[Γ, BK̃], [-M̃C(I-LC), Ã]]`
    pub delta: RealMatrix,
    /// Covariance of the driving noise of `x̃`.
    pub psi: RealMatrix,
    /// `E[x̃(t) Φ(t)']`: zero except the `(e, ζ)` block `-LRM̃'`, which comes
    /// from the measurement noise shared by `e(t)` and the detector input.
    pub cross: RealMatrix,
    /// Stage cost `x'Wx + u'Uu = x̃' G x̃`.
    pub g: RealMatrix,
    pub n: usize,
    pub n_zeta: usize,
}

impl AssembledMatrices {
    /// Forcing term of the stationary covariance recursion,
    /// `X = Θ X Θ' + Ψ + Θ S + S' Θ'`.
    pub fn forcing(&self) -> RealMatrix {
        let ts = &self.theta * &self.cross;
        let f = &self.psi + &ts + ts.transpose();
        (&f + f.transpose()) * 0.5
    }
}

pub fn assemble(
    plant: &DiscretePlant,
    synthesis: &LqgSynthesis,
    weights: &CostWeights,
    design: &DynamicDetectorDesign,
) -> Result<AssembledMatrices> {
    design.check_against(plant)?;
    let n = plant.state_dim();
    let nz = design.n_zeta();
    if weights.w.shape() != (n, n) || weights.u.shape() != (plant.input_dim(), plant.input_dim()) {
        return Err(Error::Argument("cost weights do not match the plant dimensions".into()));
    }
    let (a, b, c) = (&plant.a, &plant.b, &plant.c);
    let (k, l) = (&synthesis.k, &synthesis.l);
    let (at, mt, kt) = (&design.a, &design.m, &design.k);
    let ilc = synthesis.i_minus_lc(plant);

    let z_nz_n = RealMatrix::zeros(nz, n);
    let z_n_nz = RealMatrix::zeros(n, nz);
    let z_nn = RealMatrix::zeros(n, n);

    let theta = block(&[
        &[&(a + b * k), &(b * kt), &(-(b * k))],
        &[&z_nz_n, at, &(mt * c)],
        &[&z_nn, &z_n_nz, &(&ilc * a)],
    ])?;

    let delta = block(&[&[&synthesis.gamma, &(b * kt)], &[&(-(mt * c * &ilc)), at]])?;

    let q = &plant.q;
    let r = &plant.r;
    let q_ilc = q * ilc.transpose();
    let psi = block(&[
        &[q, &z_n_nz, &q_ilc],
        &[&z_nz_n, &(mt * r * mt.transpose()), &z_nz_n],
        &[&q_ilc.transpose(), &z_n_nz, &(&ilc * q * ilc.transpose() + l * r * l.transpose())],
    ])?;

    let dim = 2 * n + nz;
    let mut cross = RealMatrix::zeros(dim, dim);
    cross
        .view_mut((n + nz, n), (n, nz))
        .copy_from(&(-(l * r * mt.transpose())));

    let u = &weights.u;
    let kuk = k.transpose() * u * k;
    let kuz = k.transpose() * u * kt;
    let zuz = kt.transpose() * u * kt;
    let g = block(&[
        &[&(&weights.w + &kuk), &kuz, &(-&kuk)],
        &[&kuz.transpose(), &zuz, &(-kuz.transpose())],
        &[&(-&kuk), &(-&kuz), &kuk],
    ])?;

    Ok(AssembledMatrices {
        theta,
        delta,
        psi,
        cross,
        g,
        n,
        n_zeta: nz,
    })
}

/// Spectral test of the detection matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Detectability {
    /// `ρ(Δ) ≥ delta_min`.
    pub detectable: bool,
    pub rho: f64,
    pub spectrum: Spectrum,
}

pub fn detectability(am: &AssembledMatrices, delta_min: f64) -> Result<Detectability> {
    let spectrum = eigenvalues(&am.delta)?;
    let rho = spectrum.spectral_radius;
    Ok(Detectability {
        detectable: rho >= delta_min,
        rho,
        spectrum,
    })
}
