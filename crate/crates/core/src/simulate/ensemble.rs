use rayon::prelude::*;

use crate::detect::{detection_time, window_counts, DetectionOutcome};
use crate::error::{Error, Result};
use crate::plant::{CostWeights, DiscretePlant, InitialState, LqgSynthesis};

use super::engine::{run_replay_attack, AttackScenario, SimulationOptions, WatermarkMode};
use super::noise::NoisePlan;

/// Runs `f(0..runs)` in parallel and returns the results in run order, so
/// anything folded from them is independent of the thread count.
pub fn run_ensemble<T, F>(runs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    (0..runs as u64).into_par_iter().map(&f).collect()
}

/// Everything needed to simulate one replay attack.
#[derive(Debug, Clone)]
pub struct ReplayExperiment<'a> {
    pub plant: &'a DiscretePlant,
    pub synthesis: &'a LqgSynthesis,
    pub weights: &'a CostWeights,
    pub mode: &'a WatermarkMode,
    pub scenario: &'a AttackScenario,
    pub initial: &'a InitialState,
    pub options: &'a SimulationOptions,
    /// Alarm-count window `T`.
    pub window: usize,
}

/// Statistics of a single run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// One entry per requested `β`, in request order.
    pub detections: Vec<DetectionOutcome>,
    /// Fraction of replay samples with `g > η`.
    pub replay_alarm_rate: f64,
    /// Mean stage cost over the attack-free part of the trace.
    pub pre_attack_cost: f64,
}

impl ReplayExperiment<'_> {
    pub fn run(&self, plan: NoisePlan, betas: &[usize]) -> Result<RunOutcome> {
        let trace = run_replay_attack(
            self.plant,
            self.synthesis,
            self.mode,
            self.scenario,
            self.initial,
            plan,
            self.options,
            false,
        )?;
        let counts = window_counts(&trace.alarm, self.window);
        let start = self.scenario.attack_start;
        let detections = betas
            .iter()
            .map(|&beta| detection_time(&counts, beta, start, self.scenario.tau, self.plant.ts))
            .collect();
        let replay = &trace.alarm[start..];
        let replay_alarm_rate = replay.iter().filter(|&&a| a).count() as f64 / replay.len() as f64;
        Ok(RunOutcome {
            detections,
            replay_alarm_rate,
            pre_attack_cost: trace.mean_cost(&self.weights.w, &self.weights.u, 0, start),
        })
    }
}

/// Detection statistics for one `β`; times are averaged over detected runs.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BetaSummary {
    pub beta: usize,
    pub detection_rate: f64,
    pub mean_detection_time_s: Option<f64>,
    pub std_detection_time_s: Option<f64>,
    pub censored_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub runs: usize,
    pub per_beta: Vec<BetaSummary>,
    pub mean_replay_alarm_rate: f64,
    pub mean_pre_attack_cost: f64,
}

impl EnsembleSummary {
    pub fn from_outcomes(betas: &[usize], outcomes: &[RunOutcome]) -> Result<Self> {
        let runs = outcomes.len();
        if runs == 0 {
            return Err(Error::Argument("an ensemble needs at least one run".into()));
        }
        let per_beta = betas
            .iter()
            .enumerate()
            .map(|(i, &beta)| {
                let times: Vec<f64> = outcomes.iter().filter_map(|o| o.detections[i].detection_seconds).collect();
                let detected = times.len();
                let mean = (detected > 0).then(|| times.iter().sum::<f64>() / detected as f64);
                let std = mean.map(|mu| {
                    if detected < 2 {
                        0.0
                    } else {
                        (times.iter().map(|t| (t - mu).powi(2)).sum::<f64>() / (detected - 1) as f64).sqrt()
                    }
                });
                BetaSummary {
                    beta,
                    detection_rate: detected as f64 / runs as f64,
                    mean_detection_time_s: mean,
                    std_detection_time_s: std,
                    censored_fraction: (runs - detected) as f64 / runs as f64,
                }
            })
            .collect();
        let mean = |f: fn(&RunOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / runs as f64;
        Ok(Self {
            runs,
            per_beta,
            mean_replay_alarm_rate: mean(|o| o.replay_alarm_rate),
            mean_pre_attack_cost: mean(|o| o.pre_attack_cost),
        })
    }
}

/// `runs` independent replay attacks with `NoisePlan(master_seed, i)`.
pub fn monte_carlo(
    experiment: &ReplayExperiment<'_>,
    runs: usize,
    master_seed: u64,
    betas: &[usize],
) -> Result<EnsembleSummary> {
    if runs == 0 {
        return Err(Error::Argument("runs must be at least 1".into()));
    }
    let outcomes = run_ensemble(runs, |i| experiment.run(NoisePlan::new(master_seed, i), betas))?;
    EnsembleSummary::from_outcomes(betas, &outcomes)
}
