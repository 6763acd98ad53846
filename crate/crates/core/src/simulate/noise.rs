use crate::matcore::{RealMatrix, RealVector};
use crate::sampling::{stream, Gaussian};

/// Identifies the noise of one Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NoisePlan {
    pub master_seed: u64,
    pub run_index: u64,
}

/// Independent random sources of a run; each has its own stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseSource {
    Process = 0,
    Measurement = 1,
    Watermark = 2,
    Initial = 3,
}

const STREAMS_PER_RUN: u64 = 16;

impl NoisePlan {
    pub fn new(master_seed: u64, run_index: u64) -> Self {
        Self { master_seed, run_index }
    }

    pub fn gaussian(&self, source: NoiseSource) -> Gaussian {
        Gaussian::new(stream(
            self.master_seed,
            self.run_index * STREAMS_PER_RUN + source as u64,
        ))
    }

    pub fn streams(&self) -> NoiseStreams {
        NoiseStreams {
            process: self.gaussian(NoiseSource::Process),
            measurement: self.gaussian(NoiseSource::Measurement),
            watermark: self.gaussian(NoiseSource::Watermark),
            initial: self.gaussian(NoiseSource::Initial),
        }
    }
}

/// Draws for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepNoise {
    /// Process noise `w(t)`.
    pub w: RealVector,
    /// Measurement noise `v(t)`.
    pub v: RealVector,
    /// Standard normal vector scaled into `ξ` by the i.i.d. watermark; empty
    /// for the other modes.
    pub xi: RealVector,
}

impl StepNoise {
    pub fn zero(n: usize, p: usize, m: usize) -> Self {
        Self {
            w: RealVector::zeros(n),
            v: RealVector::zeros(p),
            xi: RealVector::zeros(m),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NoiseStreams {
    pub process: Gaussian,
    pub measurement: Gaussian,
    pub watermark: Gaussian,
    pub initial: Gaussian,
}

impl NoiseStreams {
    /// `w = S_q z₁`, `v = S_r z₂` with `S S' = cov`; `xi` gets `xi_dim`
    /// standard normals.
    pub fn draw(&mut self, q_factor: &RealMatrix, r_factor: &RealMatrix, xi_dim: usize) -> StepNoise {
        StepNoise {
            w: q_factor * self.process.vector(q_factor.ncols()),
            v: r_factor * self.measurement.vector(r_factor.ncols()),
            xi: self.watermark.vector(xi_dim),
        }
    }
}
