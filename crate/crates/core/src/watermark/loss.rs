use crate::error::Result;
use crate::matcore::{solve_dlyap, RealMatrix};
use crate::plant::{CostWeights, DiscretePlant, LqgSynthesis};

use super::assemble::{assemble, detectability, AssembledMatrices, DynamicDetectorDesign};

/// Steady-state cost with and without the watermark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub j_lqg: f64,
    pub j_tilde: f64,
    /// `J̃ - J_lqg`.
    pub delta_loss: f64,
    pub rho_delta: f64,
}

/// Stationary covariance of `x̃ = (x, ζ, e)`.
///
/// Fails with a domain error when `Θ` is not Schur.
pub fn stationary_covariance(am: &AssembledMatrices) -> Result<RealMatrix> {
    solve_dlyap(&am.theta, &am.forcing())
}

pub(crate) fn stationary_cost(am: &AssembledMatrices) -> Result<f64> {
    let x = stationary_covariance(am)?;
    Ok((&am.g * x).trace())
}

/// Optimal LQG cost `J*`, evaluated by the same covariance machinery with
/// no detector.
pub fn lqg_cost(plant: &DiscretePlant, synthesis: &LqgSynthesis, weights: &CostWeights) -> Result<f64> {
    let none = DynamicDetectorDesign::zero(0, plant.output_dim(), plant.input_dim());
    stationary_cost(&assemble(plant, synthesis, weights, &none)?)
}

pub fn performance_loss(
    plant: &DiscretePlant,
    synthesis: &LqgSynthesis,
    weights: &CostWeights,
    design: &DynamicDetectorDesign,
) -> Result<LossReport> {
    let am = assemble(plant, synthesis, weights, design)?;
    let j_tilde = stationary_cost(&am)?;
    let j_lqg = lqg_cost(plant, synthesis, weights)?;
    let rho_delta = detectability(&am, 1.0)?.rho;
    Ok(LossReport {
        j_lqg,
        j_tilde,
        delta_loss: j_tilde - j_lqg,
        rho_delta,
    })
}
