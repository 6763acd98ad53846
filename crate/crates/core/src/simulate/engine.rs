use crate::detect::{calibrate_threshold, ResidueStatistic};
use crate::error::{Error, Result};
use crate::matcore::{eigenvalues, is_positive_semidefinite, RealMatrix, RealVector};
use crate::plant::{DiscretePlant, InitialState, LqgSynthesis};
use crate::sampling::covariance_factor;
use crate::watermark::DynamicDetectorDesign;

use super::noise::{NoisePlan, NoiseStreams, StepNoise};
use super::trace::{SigmaDiagnostics, SimulationTrace, TraceMetadata};

/// Samples simulated before the recorded part of a trace.
pub const DEFAULT_WARMUP: usize = 500;

/// How the control input is watermarked.
#[derive(Debug, Clone, PartialEq)]
pub enum WatermarkMode {
    None,
    /// `ξ = K̃ζ` with `ζ(t+1) = Ãζ(t) + M̃(y(t) - Cx̂(t))`.
    Dynamic(DynamicDetectorDesign),
    /// `ξ ~ N(0, cov)`, white.
    IidGaussian { cov: RealMatrix },
}

impl WatermarkMode {
    pub fn label(&self) -> &'static str {
        match self {
            WatermarkMode::None => "none",
            WatermarkMode::Dynamic(_) => "dynamic",
            WatermarkMode::IidGaussian { .. } => "iid",
        }
    }

    pub fn n_zeta(&self) -> usize {
        match self {
            WatermarkMode::Dynamic(d) => d.n_zeta(),
            _ => 0,
        }
    }
}

/// Disruption signal `f(t)`, with `t` counted from the attack start.
#[derive(Debug, Clone, PartialEq)]
pub enum FProfile {
    Zero,
    Constant(RealVector),
    Ramp(RealVector),
}

impl FProfile {
    pub fn at(&self, k: usize, dim: usize) -> RealVector {
        match self {
            FProfile::Zero => RealVector::zeros(dim),
            FProfile::Constant(v) => v.clone(),
            FProfile::Ramp(slope) => slope * k as f64,
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            FProfile::Zero => None,
            FProfile::Constant(v) | FProfile::Ramp(v) => Some(v.len()),
        }
    }
}

/// Record `[start - τ, start - 1]`, replay `[start, start + τ - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackScenario {
    pub tau: usize,
    /// Disruption channel `Bᵃ`.
    pub ba: RealMatrix,
    pub f_profile: FProfile,
    /// First replayed sample, counted after the warm-up.
    pub attack_start: usize,
}

impl AttackScenario {
    /// `Bᵃ = B`, `f = 0`, replay immediately after one recording window.
    pub fn replay_only(plant: &DiscretePlant, tau: usize) -> Self {
        Self {
            tau,
            ba: plant.b.clone(),
            f_profile: FProfile::Zero,
            attack_start: tau,
        }
    }

    pub fn horizon(&self) -> usize {
        self.attack_start + self.tau
    }

    fn validate(&self, plant: &DiscretePlant) -> Result<()> {
        if self.tau == 0 {
            return Err(Error::Argument("replay horizon τ must be at least 1".into()));
        }
        if self.attack_start < self.tau {
            return Err(Error::Argument(format!(
                "attack starts at sample {} but τ = {} samples must be recorded first",
                self.attack_start, self.tau
            )));
        }
        if self.ba.nrows() != plant.state_dim() {
            return Err(Error::Argument(format!("Bᵃ must have {} rows", plant.state_dim())));
        }
        if let Some(d) = self.f_profile.dim() {
            if d != self.ba.ncols() {
                return Err(Error::Argument(format!("f has {d} entries but Bᵃ has {} columns", self.ba.ncols())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub warmup: usize,
    /// False-alarm rate used to flag alarms in the trace.
    pub alpha: f64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            warmup: DEFAULT_WARMUP,
            alpha: 0.01,
        }
    }
}

/// Plant state, one-step prediction and detector state.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopState {
    pub x: RealVector,
    /// `x̂(t|t-1)`
    pub xhat_prior: RealVector,
    pub zeta: RealVector,
}

/// Signals of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub x: RealVector,
    pub xhat_prior: RealVector,
    /// `x̂(t)`
    pub xhat: RealVector,
    pub zeta: RealVector,
    pub u: RealVector,
    pub xi: RealVector,
    /// Output as seen by the estimator.
    pub y: RealVector,
    /// `y(t) - C x̂(t|t-1)`
    pub r: RealVector,
    pub g: f64,
}

/// Plant, controller and watermark bundled for stepping.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    pub plant: &'a DiscretePlant,
    pub synthesis: &'a LqgSynthesis,
    pub mode: &'a WatermarkMode,
    statistic: ResidueStatistic,
    q_factor: RealMatrix,
    r_factor: RealMatrix,
    xi_factor: Option<RealMatrix>,
}

impl<'a> Simulator<'a> {
    pub fn new(plant: &'a DiscretePlant, synthesis: &'a LqgSynthesis, mode: &'a WatermarkMode) -> Result<Self> {
        let (n, m, p) = (plant.state_dim(), plant.input_dim(), plant.output_dim());
        if synthesis.k.shape() != (m, n) || synthesis.l.shape() != (n, p) {
            return Err(Error::Argument("synthesis does not match the plant dimensions".into()));
        }
        let xi_factor = match mode {
            WatermarkMode::None => None,
            WatermarkMode::Dynamic(d) => {
                d.check_against(plant)?;
                if d.n_zeta() > 0 && eigenvalues(&d.a)?.spectral_radius >= 1.0 {
                    return Err(Error::Argument("watermark generator Ã must be Schur".into()));
                }
                None
            }
            WatermarkMode::IidGaussian { cov } => {
                if cov.shape() != (m, m) || !is_positive_semidefinite(cov, 1e-10) {
                    return Err(Error::Argument(format!(
                        "i.i.d. watermark covariance must be a {m}x{m} symmetric PSD matrix"
                    )));
                }
                Some(covariance_factor(cov))
            }
        };
        Ok(Self {
            plant,
            synthesis,
            mode,
            statistic: ResidueStatistic::new(&synthesis.h)?,
            q_factor: covariance_factor(&plant.q),
            r_factor: covariance_factor(&plant.r),
            xi_factor,
        })
    }

    /// `x(0) ~ N(μ, Σ0)`, `x̂(0|-1) = μ`, `ζ(0) = 0`.
    pub fn initial_state(&self, initial: &InitialState, streams: &mut NoiseStreams) -> Result<ClosedLoopState> {
        let n = self.plant.state_dim();
        if initial.mean.len() != n {
            return Err(Error::Argument(format!("initial mean must have {n} entries")));
        }
        let z = streams.initial.vector(n);
        Ok(ClosedLoopState {
            x: &initial.mean + covariance_factor(&initial.cov) * z,
            xhat_prior: initial.mean.clone(),
            zeta: RealVector::zeros(self.mode.n_zeta()),
        })
    }

    pub fn draw(&self, streams: &mut NoiseStreams) -> StepNoise {
        let xi_dim = if self.xi_factor.is_some() { self.plant.input_dim() } else { 0 };
        streams.draw(&self.q_factor, &self.r_factor, xi_dim)
    }

    /// One sample. `spoofed` replaces the measurement seen by the estimator
    /// and detector; `disruption` is added to the plant as `Bᵃ f`.
    pub fn step(
        &self,
        state: &ClosedLoopState,
        noise: &StepNoise,
        spoofed: Option<&RealVector>,
        disruption: Option<&RealVector>,
    ) -> Result<(ClosedLoopState, StepRecord)> {
        let plant = self.plant;
        let (n, m, p) = (plant.state_dim(), plant.input_dim(), plant.output_dim());
        if state.x.len() != n || state.xhat_prior.len() != n || state.zeta.len() != self.mode.n_zeta() {
            return Err(Error::Argument("closed-loop state does not match the plant and watermark".into()));
        }
        if noise.w.len() != n || noise.v.len() != p {
            return Err(Error::Argument("noise sample does not match the plant dimensions".into()));
        }
        let y = match spoofed {
            Some(y) if y.len() != p => return Err(Error::Argument(format!("spoofed output must have {p} entries"))),
            Some(y) => y.clone(),
            None => &plant.c * &state.x + &noise.v,
        };
        let r = &y - &plant.c * &state.xhat_prior;
        let g = self.statistic.evaluate(&r)?;
        let xhat = &state.xhat_prior + &self.synthesis.l * &r;

        let (xi, zeta_next) = match self.mode {
            WatermarkMode::None => (RealVector::zeros(m), RealVector::zeros(0)),
            WatermarkMode::Dynamic(d) => {
                let xi = &d.k * &state.zeta;
                // driven by the filtered innovation y - C x̂(t)
                let zeta_next = &d.a * &state.zeta + &d.m * (&y - &plant.c * &xhat);
                (xi, zeta_next)
            }
            WatermarkMode::IidGaussian { .. } => {
                let factor = self.xi_factor.as_ref().expect("factor built for iid mode");
                if noise.xi.len() != m {
                    return Err(Error::Argument(format!("watermark noise must have {m} entries")));
                }
                (factor * &noise.xi, RealVector::zeros(0))
            }
        };
        let u = &self.synthesis.k * &xhat + &xi;
        let xhat_prior_next = &plant.a * &xhat + &plant.b * &u;
        let mut x_next = &plant.a * &state.x + &plant.b * &u + &noise.w;
        if let Some(d) = disruption {
            x_next += d;
        }
        let record = StepRecord {
            x: state.x.clone(),
            xhat_prior: state.xhat_prior.clone(),
            xhat,
            zeta: state.zeta.clone(),
            u,
            xi,
            y,
            r,
            g,
        };
        Ok((
            ClosedLoopState {
                x: x_next,
                xhat_prior: xhat_prior_next,
                zeta: zeta_next,
            },
            record,
        ))
    }

    fn warm_up(&self, initial: &InitialState, streams: &mut NoiseStreams, warmup: usize) -> Result<ClosedLoopState> {
        let mut state = self.initial_state(initial, streams)?;
        for _ in 0..warmup {
            let noise = self.draw(streams);
            state = self.step(&state, &noise, None, None)?.0;
        }
        Ok(state)
    }

    /// Runs `horizon` attack-free samples after the warm-up and hands each
    /// record to `visit` without storing the trace.
    pub fn stream(
        &self,
        initial: &InitialState,
        plan: NoisePlan,
        warmup: usize,
        horizon: usize,
        mut visit: impl FnMut(usize, &StepRecord),
    ) -> Result<()> {
        let mut streams = plan.streams();
        let mut state = self.warm_up(initial, &mut streams, warmup)?;
        for t in 0..horizon {
            let noise = self.draw(&mut streams);
            let (next, record) = self.step(&state, &noise, None, None)?;
            visit(t, &record);
            state = next;
        }
        Ok(())
    }
}

/// Free-function form of [`Simulator::step`].
pub fn step_closed_loop(
    state: &ClosedLoopState,
    plant: &DiscretePlant,
    synthesis: &LqgSynthesis,
    mode: &WatermarkMode,
    noise: &StepNoise,
) -> Result<(ClosedLoopState, StepRecord)> {
    Simulator::new(plant, synthesis, mode)?.step(state, noise, None, None)
}

fn threshold(plant: &DiscretePlant, alpha: f64) -> Result<f64> {
    calibrate_threshold(plant.output_dim(), alpha)
}

/// Attack-free trace of `horizon` samples after the warm-up.
pub fn run_trace(
    plant: &DiscretePlant,
    synthesis: &LqgSynthesis,
    mode: &WatermarkMode,
    horizon: usize,
    initial: &InitialState,
    plan: NoisePlan,
    options: &SimulationOptions,
) -> Result<SimulationTrace> {
    let sim = Simulator::new(plant, synthesis, mode)?;
    let eta = threshold(plant, options.alpha)?;
    let mut trace = SimulationTrace::new(TraceMetadata::new(plant, mode, plan, options, eta, None));
    sim.stream(initial, plan, options.warmup, horizon, |_, rec| trace.push(rec.clone()))?;
    Ok(trace)
}

/// Record-and-replay attack.
///
/// The trace covers `[0, attack_start + τ)` after the warm-up. During the
/// replay window the estimator and detector see `y(t - τ)` from the
/// recording window while the plant evolves under the resulting input plus
/// `Bᵃ f`. With `paired`, the trace also carries
/// `σ₁(t) = x̂ᵃ(t|t-1) - x̂(t-τ|t-τ-1)` and `σ₂(t) = ζᵃ(t) - ζ(t-τ)` over the
/// replay window. The attack-free reference is the recorded run itself: it
/// is the counterfactual driven by the same recorded-phase noise.
#[allow(clippy::too_many_arguments)]
pub fn run_replay_attack(
    plant: &DiscretePlant,
    synthesis: &LqgSynthesis,
    mode: &WatermarkMode,
    scenario: &AttackScenario,
    initial: &InitialState,
    plan: NoisePlan,
    options: &SimulationOptions,
    paired: bool,
) -> Result<SimulationTrace> {
    scenario.validate(plant)?;
    let sim = Simulator::new(plant, synthesis, mode)?;
    let eta = threshold(plant, options.alpha)?;
    let mut trace = SimulationTrace::new(TraceMetadata::new(plant, mode, plan, options, eta, Some(scenario)));

    let mut streams = plan.streams();
    let mut state = sim.warm_up(initial, &mut streams, options.warmup)?;
    let start = scenario.attack_start;
    for t in 0..scenario.horizon() {
        let noise = sim.draw(&mut streams);
        let (next, record) = if t < start {
            sim.step(&state, &noise, None, None)?
        } else {
            let replayed = trace.y[t - scenario.tau].clone();
            let f = scenario.f_profile.at(t - start, scenario.ba.ncols());
            let disruption = &scenario.ba * f;
            sim.step(&state, &noise, Some(&replayed), Some(&disruption))?
        };
        trace.push(record);
        state = next;
    }

    if paired {
        let mut s1 = Vec::with_capacity(scenario.tau);
        let mut s2 = Vec::with_capacity(scenario.tau);
        for t in start..scenario.horizon() {
            s1.push(&trace.xhat_prior[t] - &trace.xhat_prior[t - scenario.tau]);
            s2.push(&trace.zeta[t] - &trace.zeta[t - scenario.tau]);
        }
        trace.sigma = Some(SigmaDiagnostics { start, s1, s2 });
    }
    Ok(trace)
}
