use crate::error::{Error, Result};
use crate::matcore::{solve_dlyap, RealMatrix};
use crate::plant::{CostWeights, DiscretePlant, LqgSynthesis};

use super::assemble::{assemble, DynamicDetectorDesign};
use super::loss::lqg_cost;

const MATCH_TOL: f64 = 1e-6;

/// Steady-state cost of `u = Kx̂ + ξ` with `ξ ~ N(0, Q_w)` white and
/// independent of the plant noise.
///
/// `ξ` enters the plant and the one-step prediction identically, so the
/// estimation error is untouched; only the `x` block gains `B Q_w B'`, and
/// the stage cost gains `tr(U Q_w)`.
pub fn iid_loss(
    plant: &DiscretePlant,
    synthesis: &LqgSynthesis,
    weights: &CostWeights,
    input_cov: &RealMatrix,
) -> Result<f64> {
    let m = plant.input_dim();
    if input_cov.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "watermark covariance must be {m}x{m}, got {}x{}",
            input_cov.nrows(),
            input_cov.ncols()
        )));
    }
    let none = DynamicDetectorDesign::zero(0, plant.output_dim(), m);
    let am = assemble(plant, synthesis, weights, &none)?;
    let n = plant.state_dim();
    let mut forcing = am.forcing();
    let injected = &plant.b * input_cov * plant.b.transpose();
    let mut top = forcing.view_mut((0, 0), (n, n));
    top += &injected;
    let x = solve_dlyap(&am.theta, &forcing)?;
    Ok((&am.g * x).trace() + (&weights.u * input_cov).trace())
}

/// i.i.d. Gaussian watermark `ξ ~ N(0, c I)` tuned to a given loss.
#[derive(Debug, Clone, PartialEq)]
pub struct IidBaseline {
    /// Scale `c` of the identity covariance direction.
    pub scale: f64,
    /// `Q_w = c I`.
    pub cov: RealMatrix,
    pub j_lqg: f64,
    pub j_tilde: f64,
    pub delta_loss: f64,
}

/// Finds `c` with `iid_loss(c I) - J* = target_loss` to relative `1e-6`.
///
/// The loss is linear in `c`, but it is located by bracketing and bisection
/// so the code path does not rely on that.
pub fn iid_baseline_matched(
    plant: &DiscretePlant,
    synthesis: &LqgSynthesis,
    weights: &CostWeights,
    target_loss: f64,
) -> Result<IidBaseline> {
    if !(target_loss.is_finite() && target_loss >= 0.0) {
        return Err(Error::Argument(format!(
            "target performance loss must be a nonnegative number, got {target_loss}"
        )));
    }
    let m = plant.input_dim();
    let eye = RealMatrix::identity(m, m);
    let j_lqg = lqg_cost(plant, synthesis, weights)?;
    let excess = |c: f64| -> Result<f64> { Ok(iid_loss(plant, synthesis, weights, &(&eye * c))? - j_lqg) };

    if target_loss == 0.0 {
        return Ok(IidBaseline {
            scale: 0.0,
            cov: RealMatrix::zeros(m, m),
            j_lqg,
            j_tilde: j_lqg,
            delta_loss: 0.0,
        });
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    while excess(hi)? < target_loss {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Numeric("cannot bracket the matched watermark scale".into()));
        }
    }
    let mut c = hi;
    let mut loss = excess(hi)?;
    for _ in 0..400 {
        if (loss - target_loss).abs() <= MATCH_TOL * target_loss {
            break;
        }
        c = 0.5 * (lo + hi);
        loss = excess(c)?;
        if loss < target_loss {
            lo = c;
        } else {
            hi = c;
        }
    }
    if (loss - target_loss).abs() > MATCH_TOL * target_loss {
        return Err(Error::Numeric("matched watermark bisection did not converge".into()));
    }
    Ok(IidBaseline {
        scale: c,
        cov: &eye * c,
        j_lqg,
        j_tilde: j_lqg + loss,
        delta_loss: loss,
    })
}
