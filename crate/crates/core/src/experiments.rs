//! Monte Carlo studies built on the simulator: detection time against the
//! alarm threshold, control-signal comparison at equal detection time, the
//! loss-versus-δ sweep, and empirical cost checks.

use std::io::Write;

use serde::Serialize;

use crate::detect::DetectorConfig;
use crate::error::{Error, Result};
use crate::matcore::RealMatrix;
use crate::plant::{CostWeights, DiscretePlant, InitialState, LqgSynthesis};
use crate::simulate::{
    monte_carlo, AttackScenario, EnsembleSummary, NoisePlan, ReplayExperiment, SimulationOptions, Simulator,
    WatermarkMode,
};
use crate::watermark::{
    iid_baseline_matched, optimize_design, performance_loss, DynamicDetectorDesign, OptimizeOptions,
};

/// A synthesized plant together with the attack and detector settings shared
/// by every experiment.
#[derive(Debug, Clone)]
pub struct Study {
    pub plant: DiscretePlant,
    pub weights: CostWeights,
    pub synthesis: LqgSynthesis,
    pub initial: InitialState,
    pub scenario: AttackScenario,
    pub detector: DetectorConfig,
    pub options: SimulationOptions,
}

impl Study {
    pub fn experiment<'a>(&'a self, mode: &'a WatermarkMode) -> ReplayExperiment<'a> {
        ReplayExperiment {
            plant: &self.plant,
            synthesis: &self.synthesis,
            weights: &self.weights,
            mode,
            scenario: &self.scenario,
            initial: &self.initial,
            options: &self.options,
            window: self.detector.window,
        }
    }

    pub fn ensemble(&self, mode: &WatermarkMode, runs: usize, seed: u64, betas: &[usize]) -> Result<EnsembleSummary> {
        monte_carlo(&self.experiment(mode), runs, seed, betas)
    }

    /// i.i.d. watermark with the same analytic loss as `design`.
    pub fn matched_baseline(&self, design: &DynamicDetectorDesign) -> Result<WatermarkMode> {
        let loss = performance_loss(&self.plant, &self.synthesis, &self.weights, design)?;
        let base = iid_baseline_matched(&self.plant, &self.synthesis, &self.weights, loss.delta_loss.max(0.0))?;
        Ok(WatermarkMode::IidGaussian { cov: base.cov })
    }

    /// Time average of `x'Wx + u'Uu` over `samples` attack-free samples.
    pub fn empirical_cost(&self, mode: &WatermarkMode, samples: usize, plan: NoisePlan) -> Result<f64> {
        let sim = Simulator::new(&self.plant, &self.synthesis, mode)?;
        let (w, u) = (&self.weights.w, &self.weights.u);
        let mut total = 0.0;
        sim.stream(&self.initial, plan, self.options.warmup, samples, |_, rec| {
            total += rec.x.dot(&(w * &rec.x)) + rec.u.dot(&(u * &rec.u));
        })?;
        Ok(total / samples as f64)
    }
}

/// One row of the detection-time curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub beta: usize,
    pub method: String,
    pub detection_rate: f64,
    pub mean_detection_time_s: Option<f64>,
    pub censored_fraction: f64,
}

/// Detection statistics for the dynamic design and its matched-loss i.i.d.
/// baseline over a list of `β`.
pub fn detection_curve(
    study: &Study,
    design: &DynamicDetectorDesign,
    betas: &[usize],
    runs: usize,
    seed: u64,
) -> Result<Vec<CurveRow>> {
    for &beta in betas {
        study.detector.with_beta(beta)?;
    }
    let methods = [
        ("dynamic", WatermarkMode::Dynamic(design.clone())),
        ("iid", study.matched_baseline(design)?),
    ];
    let mut summaries = Vec::new();
    for (name, mode) in &methods {
        summaries.push((*name, study.ensemble(mode, runs, seed, betas)?));
    }
    let mut rows = Vec::new();
    for (i, &beta) in betas.iter().enumerate() {
        for (name, summary) in &summaries {
            let b = &summary.per_beta[i];
            rows.push(CurveRow {
                beta,
                method: name.to_string(),
                detection_rate: b.detection_rate,
                mean_detection_time_s: b.mean_detection_time_s,
                censored_fraction: b.censored_fraction,
            });
        }
    }
    Ok(rows)
}

/// Mean detection time with undetected runs counted at the end of the replay
/// window. Monotone in the watermark strength, which makes it usable for
/// calibration.
fn capped_detection_time(study: &Study, mode: &WatermarkMode, beta: usize, runs: usize, seed: u64) -> Result<f64> {
    let summary = study.ensemble(mode, runs, seed, &[beta])?;
    let b = &summary.per_beta[0];
    let cap = study.scenario.tau as f64 * study.plant.ts;
    Ok(b.mean_detection_time_s.unwrap_or(0.0) * b.detection_rate + cap * b.censored_fraction)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignalOptions {
    pub beta: usize,
    pub target_time_s: f64,
    /// Runs per detection-time estimate during calibration.
    pub calibration_runs: usize,
    /// Relative tolerance on the calibrated detection time.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Length of the exported attack-free input series.
    pub horizon: usize,
    pub seed: u64,
    pub optimizer: OptimizeOptions,
}

impl Default for ControlSignalOptions {
    fn default() -> Self {
        Self {
            beta: 30,
            target_time_s: 0.5,
            calibration_runs: 100,
            tolerance: 0.02,
            max_iterations: 24,
            horizon: 1500,
            seed: 0,
            optimizer: OptimizeOptions::default(),
        }
    }
}

/// Calibrated watermark of one method and its input statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSignal {
    pub method: String,
    /// `δ` for the dynamic design, covariance scale for the i.i.d. one.
    pub parameter: f64,
    pub detection_time_s: f64,
    /// Whether the target was reached within tolerance.
    pub calibrated: bool,
    /// `max u - min u` over all inputs and samples.
    pub range: f64,
    /// Mean of `u'u` per sample.
    pub energy: f64,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlSignalReport {
    pub dynamic: MethodSignal,
    pub iid: MethodSignal,
}

impl ControlSignalReport {
    /// `t,u_dynamic,u_iid` for single-input plants; multi-input plants get
    /// the first input.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "u_dynamic", "u_iid"])?;
        for (t, (a, b)) in self.dynamic.u.iter().zip(&self.iid.u).enumerate() {
            w.write_record([t.to_string(), a.to_string(), b.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "parameter", "detection_time_s", "calibrated", "range", "energy"])?;
        for s in [&self.dynamic, &self.iid] {
            w.write_record([
                s.method.clone(),
                s.parameter.to_string(),
                s.detection_time_s.to_string(),
                s.calibrated.to_string(),
                s.range.to_string(),
                s.energy.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Bisection of a decreasing function `time(p)` onto `target` over
/// `[lo, hi]`, in `log p` when `log_scale`. Returns the parameter, its time
/// and whether the tolerance was met.
fn calibrate(
    mut lo: f64,
    mut hi: f64,
    target: f64,
    opts: &ControlSignalOptions,
    log_scale: bool,
    mut time: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64, bool)> {
    let mut t_hi = time(hi)?;
    let mut grow = 0;
    while t_hi > target {
        lo = hi;
        hi = if log_scale { hi * 4.0 } else { 1.0 + 2.0 * (hi - 1.0) };
        t_hi = time(hi)?;
        grow += 1;
        if grow > 30 {
            return Ok((hi, t_hi, false));
        }
    }
    let mut best = (hi, t_hi);
    for _ in 0..opts.max_iterations {
        if (best.1 - target).abs() <= opts.tolerance * target {
            return Ok((best.0, best.1, true));
        }
        let mid = if log_scale { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        let t = time(mid)?;
        if (t - target).abs() < (best.1 - target).abs() {
            best = (mid, t);
        }
        if t > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ok = (best.1 - target).abs() <= opts.tolerance * target;
    Ok((best.0, best.1, ok))
}

fn input_series(study: &Study, mode: &WatermarkMode, horizon: usize, seed: u64) -> Result<Vec<RealMatrix>> {
    let sim = Simulator::new(&study.plant, &study.synthesis, mode)?;
    let mut us = Vec::with_capacity(horizon);
    sim.stream(&study.initial, NoisePlan::new(seed, 0), study.options.warmup, horizon, |_, rec| {
        us.push(RealMatrix::from_column_slice(rec.u.len(), 1, rec.u.as_slice()));
    })?;
    Ok(us)
}

fn signal(method: &str, parameter: f64, time: f64, calibrated: bool, us: Vec<RealMatrix>) -> MethodSignal {
    let all = us.iter().flat_map(|u| u.iter().copied());
    let (min, max) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let energy = us.iter().map(|u| u.norm_squared()).sum::<f64>() / us.len().max(1) as f64;
    MethodSignal {
        method: method.to_string(),
        parameter,
        detection_time_s: time,
        calibrated,
        range: max - min,
        energy,
        u: us.iter().map(|u| u[0]).collect(),
    }
}

/// Calibrates both methods to the same mean detection time at `β`, then
/// records an attack-free input trace of each with the same noise.
///
/// The dynamic method is tuned through `δ` (re-optimising the design at
/// every step), the i.i.d. method through its covariance scale.
pub fn control_signal(study: &Study, opts: &ControlSignalOptions) -> Result<ControlSignalReport> {
    study.detector.with_beta(opts.beta)?;
    if !(opts.target_time_s.is_finite() && opts.target_time_s > 0.0) {
        return Err(Error::Argument("target detection time must be positive".into()));
    }
    let runs = opts.calibration_runs;
    let mut last_design = None;
    let (delta, t_dyn, ok_dyn) = calibrate(1.01, 1.05, opts.target_time_s, opts, false, |delta| {
        let found = optimize_design(&study.plant, &study.synthesis, &study.weights, delta, &opts.optimizer)?;
        let mode = WatermarkMode::Dynamic(found.design.clone());
        let t = capped_detection_time(study, &mode, opts.beta, runs, opts.seed)?;
        last_design = Some((delta, found.design));
        Ok(t)
    })?;
    let design = match last_design {
        Some((d, design)) if d == delta => design,
        _ => optimize_design(&study.plant, &study.synthesis, &study.weights, delta, &opts.optimizer)?.design,
    };

    let m = study.plant.input_dim();
    let iid_mode = |c: f64| WatermarkMode::IidGaussian {
        cov: RealMatrix::identity(m, m) * c,
    };
    let (scale, t_iid, ok_iid) = calibrate(1e-3, 1e-2, opts.target_time_s, opts, true, |c| {
        capped_detection_time(study, &iid_mode(c), opts.beta, runs, opts.seed)
    })?;

    let dyn_u = input_series(study, &WatermarkMode::Dynamic(design), opts.horizon, opts.seed)?;
    let iid_u = input_series(study, &iid_mode(scale), opts.horizon, opts.seed)?;
    Ok(ControlSignalReport {
        dynamic: signal("dynamic", delta, t_dyn, ok_dyn, dyn_u),
        iid: signal("iid", scale, t_iid, ok_iid, iid_u),
    })
}

/// One row of the loss-versus-δ sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    pub rho_delta: f64,
    pub loss: f64,
    pub delta_loss: f64,
}

pub fn loss_sweep(study: &Study, deltas: &[f64], opts: &OptimizeOptions) -> Result<Vec<SweepRow>> {
    deltas
        .iter()
        .map(|&delta| {
            let found = optimize_design(&study.plant, &study.synthesis, &study.weights, delta, opts)?;
            Ok(SweepRow {
                delta,
                rho_delta: found.loss.rho_delta,
                loss: found.loss.j_tilde,
                delta_loss: found.loss.delta_loss,
            })
        })
        .collect()
}

/// Writes serialisable rows as CSV with a header.
pub fn write_rows<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// `beta,detection_rate,mean_detection_time_s,std_detection_time_s,censored_fraction`
pub fn write_detection_summary<W: Write>(out: W, summary: &EnsembleSummary) -> Result<()> {
    write_rows(out, &summary.per_beta)
}
