use crate::error::{Error, Result};
use crate::matcore::{adjugate, determinant, RealMatrix};
use crate::plant::{DiscretePlant, LqgSynthesis};

use super::assemble::DynamicDetectorDesign;

/// Spectral radius of the default `Ã = r I` seed.
pub const DEFAULT_SEED_RADIUS: f64 = 0.5;

/// A design with one nonzero entry in `M̃` and one in `K̃`, chosen so that
/// `det(Δ)` hits a prescribed value.
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Design {
    pub design: DynamicDetectorDesign,
    /// Position `(i, j)` of the nonzero entry of `M̃`.
    pub m_entry: (usize, usize),
    /// Position `(r, s)` of the nonzero entry of `K̃`.
    pub k_entry: (usize, usize),
    /// The product `m k` of the two entries.
    pub product: f64,
    /// `det(Δ)` evaluated on the assembled matrix.
    pub det_delta: f64,
}

/// `det(Γ) det(Ã + M̃ C(I-LC) Γ^-1 B K̃)`, the right-hand side of the
/// block-determinant identity for `Δ`. Needs an invertible `Γ`.
pub fn determinant_identity(
    plant: &DiscretePlant,
    synthesis: &LqgSynthesis,
    design: &DynamicDetectorDesign,
) -> Result<f64> {
    let gamma_inv = synthesis
        .gamma
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain("Γ is singular".into()))?;
    let inner = &design.a + &design.m * &plant.c * synthesis.i_minus_lc(plant) * gamma_inv * &plant.b * &design.k;
    Ok(determinant(&synthesis.gamma)? * determinant(&inner)?)
}

/// Rank-one construction of a detectable design.
///
/// With `M̃ = m e_i e_j'` and `K̃ = k e_r e_s'`,
/// `det(Δ) = det(Γ) det(Ã) + m k · cof_is(Ã) · [C(I-LC) adj(Γ) B]_jr`.
/// The adjugate form is used instead of `det(Γ) Γ^-1` so that a Γ with a
/// tiny eigenvalue (any plant with a fast discretized mode) is handled
/// without loss of precision. The entry positions maximise
/// `|cof_is(Ã) · [C(I-LC) adj(Γ) B]_jr|`; the first maximum in row-major
/// scan order wins.
///
/// `target_det` may be any finite value, including `det(Γ) det(Ã)` itself
/// (which yields `m k = 0`).
pub fn theorem2_construct(
    plant: &DiscretePlant,
    synthesis: &LqgSynthesis,
    a_seed: &RealMatrix,
    target_det: f64,
) -> Result<Theorem2Design> {
    if !target_det.is_finite() {
        return Err(Error::Argument(format!("target determinant must be finite, got {target_det}")));
    }
    let nz = a_seed.nrows();
    let (p, m) = (plant.output_dim(), plant.input_dim());
    let seed = DynamicDetectorDesign::new(a_seed.clone(), RealMatrix::zeros(nz, p), RealMatrix::zeros(m, nz))?;
    if nz == 0 {
        return Err(Error::Argument("detector order must be at least 1".into()));
    }
    if !seed.is_admissible()? {
        return Err(Error::Argument("seed Ã must be Schur and full rank".into()));
    }
    let det_gamma = determinant(&synthesis.gamma)?;
    if det_gamma == 0.0 {
        return Err(Error::Domain(
            "Γ is rank deficient, so no watermark can make the replay detectable this way".into(),
        ));
    }

    let adj_a = adjugate(a_seed)?;
    let coupling = &plant.c * synthesis.i_minus_lc(plant) * adjugate(&synthesis.gamma)? * &plant.b;

    // cof_is(Ã) = adj(Ã)[s, i]
    let mut best = (0.0f64, (0, 0), (0, 0));
    for i in 0..nz {
        for s in 0..nz {
            let cof = adj_a[(s, i)];
            for j in 0..p {
                for r in 0..m {
                    let gain = cof * coupling[(j, r)];
                    if gain.abs() > best.0.abs() {
                        best = (gain, (i, j), (r, s));
                    }
                }
            }
        }
    }
    let (gain, m_entry, k_entry) = best;
    if gain == 0.0 || !gain.is_finite() {
        return Err(Error::Numeric(
            "no nonzero cofactor/coupling pair found for the rank-one construction".into(),
        ));
    }

    let base = det_gamma * determinant(a_seed)?;
    let build = |product: f64| -> Result<(DynamicDetectorDesign, f64)> {
        let root = product.abs().sqrt();
        let (m_val, k_val) = if product >= 0.0 { (root, root) } else { (root, -root) };
        let mut mt = RealMatrix::zeros(nz, p);
        mt[m_entry] = m_val;
        let mut kt = RealMatrix::zeros(m, nz);
        kt[k_entry] = k_val;
        let design = DynamicDetectorDesign::new(a_seed.clone(), mt, kt)?;
        let delta = crate::matcore::block(&[
            &[&synthesis.gamma, &(&plant.b * &design.k)],
            &[&(-(&design.m * &plant.c * synthesis.i_minus_lc(plant))), &design.a],
        ])?;
        let det = determinant(&delta)?;
        Ok((design, det))
    };

    // det(Δ) is affine in m k, so a shortfall left by rounding is removed by
    // re-solving with the measured determinant, plus a few ulps of margin.
    let mut product = (target_det - base) / gain;
    let (mut design, mut det_delta) = build(product)?;
    let ulp = f64::EPSILON * target_det.abs().max(base.abs()).max(f64::MIN_POSITIVE);
    let mut margin = 4.0 * ulp;
    for _ in 0..16 {
        if det_delta >= target_det {
            break;
        }
        product += (target_det - det_delta + margin) / gain;
        (design, det_delta) = build(product)?;
        margin *= 4.0;
    }
    if det_delta < target_det {
        return Err(Error::Numeric(format!(
            "rank-one construction reached det(Δ) = {det_delta}, short of {target_det}"
        )));
    }

    Ok(Theorem2Design {
        design,
        m_entry,
        k_entry,
        product,
        det_delta,
    })
}

/// Construction aimed at `ρ(Δ) ≥ delta`: the target is `delta^(n + n_ζ)`
/// (with a small margin), since `|det Δ|` bounds the product of the
/// eigenvalue moduli.
pub fn theorem2_for_delta(
    plant: &DiscretePlant,
    synthesis: &LqgSynthesis,
    a_seed: &RealMatrix,
    delta: f64,
) -> Result<Theorem2Design> {
    let dim = (plant.state_dim() + a_seed.nrows()) as i32;
    theorem2_construct(plant, synthesis, a_seed, delta.powi(dim) * (1.0 + 1e-6))
}

/// `Ã = r I` of the given order.
pub(crate) fn default_seed(n_zeta: usize) -> RealMatrix {
    RealMatrix::identity(n_zeta, n_zeta) * DEFAULT_SEED_RADIUS
}
