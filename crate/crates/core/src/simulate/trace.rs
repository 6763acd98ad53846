use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matcore::RealVector;
use crate::plant::DiscretePlant;

use super::engine::{AttackScenario, SimulationOptions, StepRecord, WatermarkMode};
use super::noise::NoisePlan;

/// Description of a trace, written next to its CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceMetadata {
    pub mode: String,
    pub master_seed: u64,
    pub run_index: u64,
    pub warmup: usize,
    pub alpha: f64,
    pub eta: f64,
    pub ts: f64,
    pub state_dim: usize,
    pub zeta_dim: usize,
    pub input_dim: usize,
    pub output_dim: usize,
    /// First replayed sample.
    pub attack_start: Option<usize>,
    pub tau: Option<usize>,
}

impl TraceMetadata {
    pub(crate) fn new(
        plant: &DiscretePlant,
        mode: &WatermarkMode,
        plan: NoisePlan,
        options: &SimulationOptions,
        eta: f64,
        scenario: Option<&AttackScenario>,
    ) -> Self {
        Self {
            mode: mode.label().to_string(),
            master_seed: plan.master_seed,
            run_index: plan.run_index,
            warmup: options.warmup,
            alpha: options.alpha,
            eta,
            ts: plant.ts,
            state_dim: plant.state_dim(),
            zeta_dim: mode.n_zeta(),
            input_dim: plant.input_dim(),
            output_dim: plant.output_dim(),
            attack_start: scenario.map(|s| s.attack_start),
            tau: scenario.map(|s| s.tau),
        }
    }
}

/// Estimator and detector discrepancies over the replay window; entry `k`
/// belongs to sample `start + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaDiagnostics {
    pub start: usize,
    pub s1: Vec<RealVector>,
    pub s2: Vec<RealVector>,
}

impl SigmaDiagnostics {
    /// `(σ₁, σ₂)` stacked.
    pub fn stacked(&self, k: usize) -> RealVector {
        let (a, b) = (&self.s1[k], &self.s2[k]);
        RealVector::from_iterator(a.len() + b.len(), a.iter().chain(b.iter()).copied())
    }

    pub fn len(&self) -> usize {
        self.s1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s1.is_empty()
    }
}

/// Column-wise record of a simulation; sample `t` is index `t` of every
/// series.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub meta: TraceMetadata,
    pub x: Vec<RealVector>,
    pub xhat_prior: Vec<RealVector>,
    pub xhat: Vec<RealVector>,
    pub zeta: Vec<RealVector>,
    pub u: Vec<RealVector>,
    pub xi: Vec<RealVector>,
    pub y: Vec<RealVector>,
    pub r: Vec<RealVector>,
    pub g: Vec<f64>,
    pub alarm: Vec<bool>,
    pub sigma: Option<SigmaDiagnostics>,
}

impl SimulationTrace {
    pub(crate) fn new(meta: TraceMetadata) -> Self {
        Self {
            meta,
            x: Vec::new(),
            xhat_prior: Vec::new(),
            xhat: Vec::new(),
            zeta: Vec::new(),
            u: Vec::new(),
            xi: Vec::new(),
            y: Vec::new(),
            r: Vec::new(),
            g: Vec::new(),
            alarm: Vec::new(),
            sigma: None,
        }
    }

    pub(crate) fn push(&mut self, rec: StepRecord) {
        self.alarm.push(rec.g > self.meta.eta);
        self.g.push(rec.g);
        self.x.push(rec.x);
        self.xhat_prior.push(rec.xhat_prior);
        self.xhat.push(rec.xhat);
        self.zeta.push(rec.zeta);
        self.u.push(rec.u);
        self.xi.push(rec.xi);
        self.y.push(rec.y);
        self.r.push(rec.r);
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn header(&self) -> Vec<String> {
        let m = &self.meta;
        let mut cols = vec!["t".to_string()];
        let mut add = |name: &str, dim: usize| cols.extend((1..=dim).map(|i| format!("{name}_{i}")));
        add("x", m.state_dim);
        add("xhat", m.state_dim);
        add("zeta", m.zeta_dim);
        add("u", m.input_dim);
        add("xi", m.input_dim);
        add("y", m.output_dim);
        add("r", m.output_dim);
        cols.push("g".into());
        cols.push("alarm".into());
        cols
    }

    /// One row per sample. `xhat` is the filtered estimate `x̂(t)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        let mut row: Vec<String> = Vec::new();
        for t in 0..self.len() {
            row.clear();
            row.push(t.to_string());
            for series in [&self.x, &self.xhat, &self.zeta, &self.u, &self.xi, &self.y, &self.r] {
                row.extend(series[t].iter().map(|v| v.to_string()));
            }
            row.push(self.g[t].to_string());
            row.push(u8::from(self.alarm[t]).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn metadata_toml(&self) -> Result<String> {
        toml::to_string(&self.meta).map_err(|e| Error::Argument(format!("cannot serialise trace metadata: {e}")))
    }

    /// Mean of `x'Wx + u'Uu` over samples `[from, to)`.
    pub fn mean_cost(&self, w: &crate::matcore::RealMatrix, u: &crate::matcore::RealMatrix, from: usize, to: usize) -> f64 {
        let to = to.min(self.len());
        if to <= from {
            return f64::NAN;
        }
        let total: f64 = (from..to)
            .map(|t| (self.x[t].transpose() * w * &self.x[t])[(0, 0)] + (self.u[t].transpose() * u * &self.u[t])[(0, 0)])
            .sum();
        total / (to - from) as f64
    }
}
