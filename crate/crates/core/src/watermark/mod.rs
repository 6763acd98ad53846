//! Dynamic attack detector ("dynamic watermark") design and analysis.
//!
//! The detector is the auxiliary system
//! `ζ(t+1) = Ãζ(t) + M̃(y(t) - Cx̂(t))`, `ξ(t) = K̃ζ(t)`, whose output is added
//! to the LQG input. Under a replay attack the estimator discrepancy and the
//! detector discrepancy evolve through the detection matrix `Δ`; a design with
//! `ρ(Δ) > 1` makes the residue diverge.

mod assemble;
mod baseline;
mod construct;
mod loss;
mod optimize;
mod record;

pub use assemble::{assemble, detectability, AssembledMatrices, Detectability, DynamicDetectorDesign};
pub use baseline::{iid_baseline_matched, iid_loss, IidBaseline};
pub use construct::{
    determinant_identity, theorem2_construct, theorem2_for_delta, Theorem2Design, DEFAULT_SEED_RADIUS,
};
pub use loss::{lqg_cost, performance_loss, stationary_covariance, LossReport};
pub use optimize::{optimize_design, OptimizeOptions, OptimizedDesign};
pub use record::DesignRecord;
