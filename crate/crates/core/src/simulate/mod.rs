//! Closed-loop stochastic simulation: nominal and watermarked operation, the
//! record-and-replay attack, and Monte Carlo ensembles.

mod engine;
mod ensemble;
mod noise;
mod trace;

pub use engine::{
    run_replay_attack, run_trace, step_closed_loop, AttackScenario, ClosedLoopState, FProfile, SimulationOptions,
    Simulator, StepRecord, WatermarkMode, DEFAULT_WARMUP,
};
pub use ensemble::{monte_carlo, run_ensemble, BetaSummary, EnsembleSummary, ReplayExperiment, RunOutcome};
pub use noise::{NoisePlan, NoiseSource, NoiseStreams, StepNoise};
pub use trace::{SigmaDiagnostics, SimulationTrace, TraceMetadata};
