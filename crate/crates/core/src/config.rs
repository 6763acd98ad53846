//! TOML experiment configuration.
//!
//! Every section is optional; omitted values fall back to the DC-motor
//! study. Matrices are written as lists of rows. Validation errors name the
//! offending field as a dotted path.

use serde::{Deserialize, Serialize};

use crate::detect::DetectorConfig;
use crate::error::{Error, Result};
use crate::experiments::{ControlSignalOptions, Study};
use crate::matcore::{RealMatrix, RealVector};
use crate::plant::{discretize_zoh, synthesize_lqg, ContinuousPlant, CostWeights, DiscretePlant, InitialState};
use crate::presets::{paper_design, DcMotorPreset, DC_MOTOR};
use crate::simulate::{AttackScenario, FProfile, SimulationOptions, WatermarkMode, DEFAULT_WARMUP};
use crate::watermark::{DesignRecord, DynamicDetectorDesign, OptimizeOptions};

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub plant: PlantSpec,
    pub noise: NoiseSpec,
    pub cost: CostSpec,
    pub initial: InitialSpec,
    pub detector: DetectorSpec,
    pub attack: AttackSpec,
    pub watermark: WatermarkSpec,
    pub monte_carlo: MonteCarloSpec,
    pub control_signal: ControlSignalSpec,
    pub loss_sweep: LossSweepSpec,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantModel {
    DcMotor,
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotorSpec {
    pub b: f64,
    pub j: f64,
    pub l: f64,
    pub kb: f64,
    pub kt: f64,
    pub r: f64,
}

impl Default for MotorSpec {
    fn default() -> Self {
        let p = DC_MOTOR;
        Self {
            b: p.b,
            j: p.j,
            l: p.l,
            kb: p.kb,
            kt: p.kt,
            r: p.r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSpec {
    pub model: PlantModel,
    /// Sample period in seconds.
    pub ts: f64,
    pub motor: MotorSpec,
    /// Continuous `(Ac, Bc, Cc)` or discrete `(A, B, C)`, by `model`.
    pub a: Option<Rows>,
    pub b: Option<Rows>,
    pub c: Option<Rows>,
}

impl Default for PlantSpec {
    fn default() -> Self {
        Self {
            model: PlantModel::DcMotor,
            ts: DcMotorPreset::default().ts,
            motor: MotorSpec::default(),
            a: None,
            b: None,
            c: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSpec {
    /// `Q = R = scale I` unless given explicitly.
    pub scale: f64,
    pub q: Option<Rows>,
    pub r: Option<Rows>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            scale: DcMotorPreset::default().noise_scale,
            q: None,
            r: None,
        }
    }
}

/// Identity weights unless given.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostSpec {
    pub w: Option<Rows>,
    pub u: Option<Rows>,
}

/// Zero mean and covariance unless given.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSpec {
    pub mean: Option<Vec<f64>>,
    pub cov: Option<Rows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSpec {
    pub alpha: f64,
    pub window: usize,
    pub betas: Vec<usize>,
}

impl Default for DetectorSpec {
    fn default() -> Self {
        let p = DcMotorPreset::default();
        Self {
            alpha: p.alpha,
            window: p.window,
            betas: vec![1, 3, 5, 10, 30, 100],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FKind {
    Zero,
    Constant,
    Ramp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSpec {
    pub tau: usize,
    /// Defaults to `tau` (replay right after one recording window).
    pub attack_start: Option<usize>,
    /// Defaults to `B`.
    pub ba: Option<Rows>,
    pub f: FKind,
    /// Constant value or ramp slope of `f`.
    pub f_value: Option<Vec<f64>>,
}

impl Default for AttackSpec {
    fn default() -> Self {
        Self {
            tau: DcMotorPreset::default().tau,
            attack_start: None,
            ba: None,
            f: FKind::Zero,
            f_value: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeKind {
    None,
    Dynamic,
    Iid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSpec {
    pub starts: usize,
    pub rounds: usize,
    pub max_evals_per_round: usize,
    pub seed: u64,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        let o = OptimizeOptions::default();
        Self {
            starts: o.starts,
            rounds: o.rounds,
            max_evals_per_round: o.max_evals_per_round,
            seed: o.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WatermarkSpec {
    pub mode: ModeKind,
    /// Required lower bound on `ρ(Δ)`.
    pub delta: f64,
    /// Detector order; defaults to the plant order.
    pub n_zeta: Option<usize>,
    /// Explicit generator matrices (all three or none).
    pub a: Option<Rows>,
    pub m: Option<Rows>,
    pub k: Option<Rows>,
    /// Design record written by `design`.
    pub design_file: Option<String>,
    /// i.i.d. covariance scale; when omitted the loss is matched to the
    /// dynamic design.
    pub iid_scale: Option<f64>,
    pub optimizer: OptimizerSpec,
}

impl Default for WatermarkSpec {
    fn default() -> Self {
        Self {
            mode: ModeKind::Dynamic,
            delta: DcMotorPreset::default().delta,
            n_zeta: None,
            a: None,
            m: None,
            k: None,
            design_file: None,
            iid_scale: None,
            optimizer: OptimizerSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSpec {
    pub runs: usize,
    pub master_seed: u64,
    pub warmup: usize,
    /// Length of attack-free traces for `simulate`.
    pub horizon: usize,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        Self {
            runs: 1000,
            master_seed: 0,
            warmup: DEFAULT_WARMUP,
            horizon: 3000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControlSignalSpec {
    pub beta: usize,
    pub target_time_s: f64,
    pub calibration_runs: usize,
    pub tolerance: f64,
    /// Bisection steps per method.
    pub max_iterations: usize,
    pub horizon: usize,
}

impl Default for ControlSignalSpec {
    fn default() -> Self {
        let o = ControlSignalOptions::default();
        Self {
            beta: o.beta,
            target_time_s: o.target_time_s,
            calibration_runs: o.calibration_runs,
            tolerance: o.tolerance,
            max_iterations: o.max_iterations,
            horizon: o.horizon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSweepSpec {
    pub deltas: Vec<f64>,
}

impl Default for LossSweepSpec {
    fn default() -> Self {
        Self {
            deltas: vec![1.01, 1.03, 1.05, 1.1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

fn matrix(rows: &Rows, path: &str) -> Result<RealMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(Error::config(path, "matrix must have at least one row and column"));
    }
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::config(path, format!("every row must have {cols} entries")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::config(path, "entries must be finite"));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(RealMatrix::from_row_slice(rows.len(), cols, &flat))
}

fn required(rows: &Option<Rows>, path: &str) -> Result<RealMatrix> {
    match rows {
        Some(r) => matrix(r, path),
        None => Err(Error::config(path, "required for this plant model")),
    }
}

fn shaped(rows: &Option<Rows>, default: RealMatrix, path: &str) -> Result<RealMatrix> {
    match rows {
        None => Ok(default),
        Some(r) => {
            let m = matrix(r, path)?;
            if m.shape() != default.shape() {
                return Err(Error::config(
                    path,
                    format!("expected a {}x{} matrix, got {}x{}", default.nrows(), default.ncols(), m.nrows(), m.ncols()),
                ));
            }
            Ok(m)
        }
    }
}

/// Re-labels an error from a constructor with the field it came from.
fn at<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(path, other.to_string()),
    })
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let path = e.span().map_or_else(|| "<document>".to_string(), |s| format!("<document> bytes {}..{}", s.start, s.end));
            Error::config(path, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Argument(format!("cannot serialise configuration: {e}")))
    }

    /// Scalar range checks; matrix shapes are checked when the study is
    /// built.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, path: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(path, format!("must be a positive number, got {v}")))
            }
        };
        positive(self.plant.ts, "plant.ts")?;
        if self.plant.model == PlantModel::DcMotor {
            let m = &self.plant.motor;
            for (v, name) in [(m.b, "b"), (m.j, "j"), (m.l, "l"), (m.kb, "kb"), (m.kt, "kt"), (m.r, "r")] {
                positive(v, &format!("plant.motor.{name}"))?;
            }
        }
        positive(self.noise.scale, "noise.scale")?;
        let d = &self.detector;
        if !(d.alpha > 0.0 && d.alpha < 1.0) {
            return Err(Error::config("detector.alpha", format!("must lie in (0, 1), got {}", d.alpha)));
        }
        if d.window == 0 {
            return Err(Error::config("detector.window", "must be at least 1"));
        }
        if let Some(&b) = d.betas.iter().find(|&&b| b == 0 || b > d.window) {
            return Err(Error::config("detector.betas", format!("β = {b} must lie in 1..={}", d.window)));
        }
        if self.attack.tau == 0 {
            return Err(Error::config("attack.tau", "must be at least 1"));
        }
        if let Some(s) = self.attack.attack_start {
            if s < self.attack.tau {
                return Err(Error::config("attack.attack_start", "must leave τ samples for recording"));
            }
        }
        if self.attack.f != FKind::Zero && self.attack.f_value.is_none() {
            return Err(Error::config("attack.f_value", "required when f is constant or ramp"));
        }
        let w = &self.watermark;
        if !(w.delta.is_finite() && w.delta > 1.0) {
            return Err(Error::config("watermark.delta", format!("δ must exceed 1, got {}", w.delta)));
        }
        let explicit = [&w.a, &w.m, &w.k].iter().filter(|m| m.is_some()).count();
        if explicit != 0 && explicit != 3 {
            return Err(Error::config("watermark", "give all of a, m and k or none of them"));
        }
        if let Some(c) = w.iid_scale {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::config("watermark.iid_scale", "must be a nonnegative number"));
            }
        }
        if w.optimizer.starts == 0 || w.optimizer.rounds == 0 || w.optimizer.max_evals_per_round == 0 {
            return Err(Error::config("watermark.optimizer", "starts, rounds and max_evals_per_round must be positive"));
        }
        if self.monte_carlo.runs == 0 {
            return Err(Error::config("monte_carlo.runs", "must be at least 1"));
        }
        let cs = &self.control_signal;
        if cs.beta == 0 || cs.beta > d.window {
            return Err(Error::config("control_signal.beta", format!("must lie in 1..={}", d.window)));
        }
        positive(cs.target_time_s, "control_signal.target_time_s")?;
        positive(cs.tolerance, "control_signal.tolerance")?;
        if cs.max_iterations == 0 {
            return Err(Error::config("control_signal.max_iterations", "must be at least 1"));
        }
        if cs.calibration_runs == 0 {
            return Err(Error::config("control_signal.calibration_runs", "must be at least 1"));
        }
        if let Some(&bad) = self.loss_sweep.deltas.iter().find(|&&x| !(x.is_finite() && x > 1.0)) {
            return Err(Error::config("loss_sweep.deltas", format!("δ must exceed 1, got {bad}")));
        }
        Ok(())
    }

    pub fn discrete_plant(&self) -> Result<DiscretePlant> {
        let p = &self.plant;
        let (a, b, c) = match p.model {
            PlantModel::DcMotor => {
                let m = &p.motor;
                let params = crate::presets::DcMotorParams {
                    b: m.b,
                    j: m.j,
                    l: m.l,
                    kb: m.kb,
                    kt: m.kt,
                    r: m.r,
                };
                let d = at("plant", discretize_zoh(&params.continuous()?, p.ts))?;
                (d.a, d.b, d.c)
            }
            PlantModel::Continuous => {
                let cp = at(
                    "plant",
                    ContinuousPlant::new(required(&p.a, "plant.a")?, required(&p.b, "plant.b")?, required(&p.c, "plant.c")?),
                )?;
                let d = at("plant", discretize_zoh(&cp, p.ts))?;
                (d.a, d.b, d.c)
            }
            PlantModel::Discrete => (required(&p.a, "plant.a")?, required(&p.b, "plant.b")?, required(&p.c, "plant.c")?),
        };
        let (n, q_dim) = (a.nrows(), c.nrows());
        let q = shaped(&self.noise.q, RealMatrix::identity(n, n) * self.noise.scale, "noise.q")?;
        let r = shaped(&self.noise.r, RealMatrix::identity(q_dim, q_dim) * self.noise.scale, "noise.r")?;
        at("plant", DiscretePlant::new(a, b, c, q, r, p.ts))
    }

    pub fn weights(&self, plant: &DiscretePlant) -> Result<CostWeights> {
        let (n, m) = (plant.state_dim(), plant.input_dim());
        let w = shaped(&self.cost.w, RealMatrix::identity(n, n), "cost.w")?;
        let u = shaped(&self.cost.u, RealMatrix::identity(m, m), "cost.u")?;
        at("cost", CostWeights::new(w, u))
    }

    pub fn initial_state(&self, plant: &DiscretePlant) -> Result<InitialState> {
        let n = plant.state_dim();
        let mean = match &self.initial.mean {
            None => RealVector::zeros(n),
            Some(v) if v.len() == n => RealVector::from_column_slice(v),
            Some(v) => return Err(Error::config("initial.mean", format!("expected {n} entries, got {}", v.len()))),
        };
        let cov = shaped(&self.initial.cov, RealMatrix::zeros(n, n), "initial.cov")?;
        at("initial", InitialState::new(mean, cov))
    }

    pub fn scenario(&self, plant: &DiscretePlant) -> Result<AttackScenario> {
        let a = &self.attack;
        let ba = match &a.ba {
            None => plant.b.clone(),
            Some(rows) => {
                let m = matrix(rows, "attack.ba")?;
                if m.nrows() != plant.state_dim() {
                    return Err(Error::config("attack.ba", format!("must have {} rows", plant.state_dim())));
                }
                m
            }
        };
        let value = || {
            let v = a.f_value.clone().unwrap_or_default();
            if v.len() != ba.ncols() {
                return Err(Error::config("attack.f_value", format!("expected {} entries", ba.ncols())));
            }
            Ok(RealVector::from_vec(v))
        };
        let f_profile = match a.f {
            FKind::Zero => FProfile::Zero,
            FKind::Constant => FProfile::Constant(value()?),
            FKind::Ramp => FProfile::Ramp(value()?),
        };
        Ok(AttackScenario {
            tau: a.tau,
            f_profile,
            attack_start: a.attack_start.unwrap_or(a.tau),
            ba,
        })
    }

    pub fn optimize_options(&self) -> OptimizeOptions {
        let o = &self.watermark.optimizer;
        OptimizeOptions {
            starts: o.starts,
            rounds: o.rounds,
            max_evals_per_round: o.max_evals_per_round,
            seed: o.seed,
            n_zeta: self.watermark.n_zeta,
            ..OptimizeOptions::default()
        }
    }

    pub fn control_signal_options(&self) -> ControlSignalOptions {
        let c = &self.control_signal;
        ControlSignalOptions {
            beta: c.beta,
            target_time_s: c.target_time_s,
            calibration_runs: c.calibration_runs,
            tolerance: c.tolerance,
            max_iterations: c.max_iterations,
            horizon: c.horizon,
            seed: self.monte_carlo.master_seed,
            optimizer: self.optimize_options(),
        }
    }

    /// Synthesizes the controller and bundles the experiment settings.
    pub fn study(&self) -> Result<Study> {
        let plant = self.discrete_plant()?;
        let weights = self.weights(&plant)?;
        let synthesis = synthesize_lqg(&plant, &weights)?;
        let d = &self.detector;
        let beta = d.betas.first().copied().unwrap_or(1);
        Ok(Study {
            initial: self.initial_state(&plant)?,
            scenario: self.scenario(&plant)?,
            detector: at("detector", DetectorConfig::new(plant.output_dim(), d.alpha, d.window, beta))?,
            options: SimulationOptions {
                warmup: self.monte_carlo.warmup,
                alpha: d.alpha,
            },
            plant,
            weights,
            synthesis,
        })
    }

    /// Explicit matrices, then a design file, then the reference motor design
    /// when `use_paper_design` is set. `None` means "optimize".
    pub fn explicit_design(&self, use_paper_design: bool) -> Result<Option<DynamicDetectorDesign>> {
        let w = &self.watermark;
        if use_paper_design {
            return Ok(Some(paper_design()));
        }
        if let (Some(a), Some(m), Some(k)) = (&w.a, &w.m, &w.k) {
            let design = DynamicDetectorDesign::new(
                matrix(a, "watermark.a")?,
                matrix(m, "watermark.m")?,
                matrix(k, "watermark.k")?,
            );
            return at("watermark", design).map(Some);
        }
        if let Some(path) = &w.design_file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::config("watermark.design_file", format!("{path}: {e}")))?;
            let record = DesignRecord::from_toml(&text)?;
            return at("watermark.design_file", record.design()).map(Some);
        }
        Ok(None)
    }

    /// Watermark mode for single-method commands; `design` is the dynamic
    /// design in use (needed to match the i.i.d. loss).
    pub fn mode(&self, study: &Study, design: Option<&DynamicDetectorDesign>) -> Result<WatermarkMode> {
        Ok(match self.watermark.mode {
            ModeKind::None => WatermarkMode::None,
            ModeKind::Dynamic => WatermarkMode::Dynamic(
                design
                    .cloned()
                    .ok_or_else(|| Error::config("watermark", "dynamic mode needs a design"))?,
            ),
            ModeKind::Iid => match self.watermark.iid_scale {
                Some(c) => WatermarkMode::IidGaussian {
                    cov: RealMatrix::identity(study.plant.input_dim(), study.plant.input_dim()) * c,
                },
                None => study.matched_baseline(
                    design.ok_or_else(|| Error::config("watermark.iid_scale", "needed when no design is available"))?,
                )?,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_motor_study() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        let plant = cfg.discrete_plant().unwrap();
        assert_eq!(plant.state_dim(), 3);
        assert_eq!(cfg.attack.tau, 1500);
        assert_eq!(cfg.detector.window, 100);
    }

    #[test]
    fn motor_values_round_trip() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
        let m = back.plant.motor;
        assert_eq!((m.b, m.j, m.l, m.kb, m.kt, m.r), (3.5e-6, 3.23e-6, 2.75e-6, 0.0274, 0.0274, 4.0));
    }

    #[test]
    fn errors_name_the_field() {
        let err = ExperimentConfig::from_toml("[watermark]\ndelta = 0.9\n").unwrap_err();
        match err {
            Error::Config { path, message } => {
                assert_eq!(path, "watermark.delta");
                assert!(message.contains("δ must exceed 1"));
            }
            other => panic!("{other:?}"),
        }
        let err = ExperimentConfig::from_toml("[detector]\nalpha = 2.0\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "detector.alpha"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            ExperimentConfig::from_toml("[plant]\nbogus = 1\n"),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn discrete_plant_shapes_checked() {
        let text = "[plant]\nmodel = \"discrete\"\na = [[1.0]]\nb = [[1.0]]\nc = [[1.0]]\n[noise]\nscale = 1.0\nq = [[1.0, 0.0]]\n";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        let err = cfg.discrete_plant().unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "noise.q"), "{err:?}");
    }

    #[test]
    fn missing_matrix_reported() {
        let cfg = ExperimentConfig::from_toml("[plant]\nmodel = \"discrete\"\na = [[1.0]]\n").unwrap();
        assert!(matches!(cfg.discrete_plant(), Err(Error::Config { ref path, .. }) if path == "plant.b"));
    }
}
