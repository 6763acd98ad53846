//! Chi-square residue detector: the `g(t) = r' H^-1 r` statistic, threshold
//! calibration, sliding-window alarm counts and detection times.

use nalgebra::Cholesky;
use nalgebra::Dyn;

use crate::error::{Error, Result};
use crate::matcore::{chi2_quantile, RealMatrix, RealVector};

/// Threshold `η` with `P(χ²_p > η) = alpha`.
pub fn calibrate_threshold(p: usize, alpha: f64) -> Result<f64> {
    chi2_quantile(p, alpha)
}

/// `r' H^-1 r`, factorizing `H` on every call. See [`ResidueStatistic`] for
/// the cached form.
pub fn g_statistic(r: &RealVector, h: &RealMatrix) -> Result<f64> {
    ResidueStatistic::new(h)?.evaluate(r)
}

/// `g(t)` with a cached Cholesky factor of the innovation covariance.
#[derive(Debug, Clone)]
pub struct ResidueStatistic {
    chol: Cholesky<f64, Dyn>,
}

impl ResidueStatistic {
    pub fn new(h: &RealMatrix) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::Dimension("innovation covariance must be square".into()));
        }
        let chol = h
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numeric("innovation covariance is singular or indefinite".into()))?;
        Ok(Self { chol })
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn evaluate(&self, r: &RealVector) -> Result<f64> {
        if r.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "residue has {} entries, covariance is {}x{}",
                r.len(),
                self.dim(),
                self.dim()
            )));
        }
        // |L^-1 r|^2 with H = L L'
        let z = self
            .chol
            .l()
            .solve_lower_triangular(r)
            .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
        Ok(z.norm_squared())
    }
}

/// Alarm settings: false-alarm rate, derived threshold, window length and
/// alarm-count threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub alpha: f64,
    pub eta: f64,
    pub window: usize,
    pub beta: usize,
}

impl DetectorConfig {
    pub fn new(p: usize, alpha: f64, window: usize, beta: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::Argument("window length must be at least 1 sample".into()));
        }
        if beta == 0 || beta > window {
            return Err(Error::Argument(format!(
                "alarm threshold beta must lie in 1..={window}, got {beta}"
            )));
        }
        Ok(Self {
            alpha,
            eta: calibrate_threshold(p, alpha)?,
            window,
            beta,
        })
    }

    pub fn with_beta(&self, beta: usize) -> Result<Self> {
        if beta == 0 || beta > self.window {
            return Err(Error::Argument(format!(
                "alarm threshold beta must lie in 1..={}, got {beta}",
                self.window
            )));
        }
        Ok(Self { beta, ..*self })
    }

    /// Expected false alarms per window, `α T`.
    pub fn expected_false_alarms(&self) -> f64 {
        self.alpha * self.window as f64
    }

    /// `β` is not comfortably above the nominal alarm count (`β < 5 α T`).
    pub fn beta_too_low(&self) -> bool {
        (self.beta as f64) < 5.0 * self.expected_false_alarms()
    }
}

/// Per-sample alarms and trailing-window counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlarmSeries {
    pub alarms: Vec<bool>,
    pub counts: Vec<usize>,
}

/// `alarm(t) = g(t) > η`; `count(t)` sums alarms over `(t - T, t]`, or over
/// the available prefix while `t < T`.
pub fn windowed_alarms(g: &[f64], eta: f64, window: usize) -> AlarmSeries {
    let alarms: Vec<bool> = g.iter().map(|&v| v > eta).collect();
    let counts = window_counts(&alarms, window);
    AlarmSeries { alarms, counts }
}

pub fn window_counts(alarms: &[bool], window: usize) -> Vec<usize> {
    let mut counts = Vec::with_capacity(alarms.len());
    let mut running = 0usize;
    for (t, &a) in alarms.iter().enumerate() {
        running += a as usize;
        if t >= window && alarms[t - window] {
            running -= 1;
        }
        counts.push(running);
    }
    counts
}

/// Result of scanning a replay window for the first count reaching `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    pub detected: bool,
    /// Samples from the attack start to the first crossing.
    pub detection_samples: Option<usize>,
    pub detection_seconds: Option<f64>,
}

/// First `t` in `[attack_start, attack_start + tau)` with `count(t) ≥ β`.
pub fn detection_time(
    counts: &[usize],
    beta: usize,
    attack_start: usize,
    tau: usize,
    ts: f64,
) -> DetectionOutcome {
    let end = (attack_start + tau).min(counts.len());
    let hit = (attack_start..end).find(|&t| counts[t] >= beta);
    let detection_samples = hit.map(|t| t - attack_start);
    DetectionOutcome {
        detected: hit.is_some(),
        detection_samples,
        detection_seconds: detection_samples.map(|k| k as f64 * ts),
    }
}
