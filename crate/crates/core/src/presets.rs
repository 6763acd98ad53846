//! The DC-motor study: physical parameters, the experiment settings used by
//! the detection, control-signal and loss experiments, and a hand-made
//! reference design of the watermark generator.

use nalgebra::dmatrix;

use crate::error::Result;
use crate::matcore::RealMatrix;
use crate::plant::{discretize_zoh, ContinuousPlant, CostWeights, DiscretePlant};
use crate::watermark::DynamicDetectorDesign;

/// Physical parameters of the motor (SI units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcMotorParams {
    /// Viscous friction, N·m·s.
    pub b: f64,
    /// Rotor inertia, kg·m².
    pub j: f64,
    /// Armature inductance, H.
    pub l: f64,
    /// Back-EMF constant, V/(rad/s).
    pub kb: f64,
    /// Torque constant, N·m/A.
    pub kt: f64,
    /// Armature resistance, Ω.
    pub r: f64,
}

pub const DC_MOTOR: DcMotorParams = DcMotorParams {
    b: 3.5e-6,
    j: 3.23e-6,
    l: 2.75e-6,
    kb: 0.0274,
    kt: 0.0274,
    r: 4.0,
};

impl DcMotorParams {
    /// State `(angle, speed, current)`, input voltage, output angle.
    pub fn continuous(&self) -> Result<ContinuousPlant> {
        let a = dmatrix![
            0.0, 1.0, 0.0;
            0.0, -self.b / self.j, self.kt / self.j;
            0.0, -self.kb / self.l, -self.r / self.l
        ];
        let b = dmatrix![0.0; 0.0; 1.0 / self.l];
        let c = dmatrix![1.0, 0.0, 0.0];
        ContinuousPlant::new(a, b, c)
    }
}

/// Experiment settings for the motor study.
#[derive(Debug, Clone, PartialEq)]
pub struct DcMotorPreset {
    pub params: DcMotorParams,
    pub ts: f64,
    /// Noise covariances are `noise_scale · I` at the discrete level.
    pub noise_scale: f64,
    pub alpha: f64,
    pub window: usize,
    pub tau: usize,
    pub delta: f64,
}

impl Default for DcMotorPreset {
    fn default() -> Self {
        Self {
            params: DC_MOTOR,
            ts: 0.01,
            // unit-intensity noise sampled at Ts
            noise_scale: 0.01,
            alpha: 0.01,
            window: 100,
            tau: 1500,
            delta: 1.03,
        }
    }
}

impl DcMotorPreset {
    pub fn plant(&self) -> Result<DiscretePlant> {
        let d = discretize_zoh(&self.params.continuous()?, self.ts)?;
        d.with_noise(
            RealMatrix::identity(3, 3) * self.noise_scale,
            RealMatrix::identity(1, 1) * self.noise_scale,
        )
    }

    pub fn weights(&self) -> CostWeights {
        CostWeights::identity(3, 1)
    }
}

/// Hand-made reference `(Ã, M̃, K̃)` for the motor.
pub fn paper_design() -> DynamicDetectorDesign {
    DynamicDetectorDesign {
        a: dmatrix![0.48, -0.81, 0.02; 0.01, 0.61, -0.92; 0.89, 0.73, -0.9],
        m: dmatrix![-0.84; -0.49; -0.81],
        k: dmatrix![0.9, -0.1, 0.35],
    }
}
