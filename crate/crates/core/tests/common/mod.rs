#![allow(dead_code)]

use dynwm::config::ExperimentConfig;
use dynwm::experiments::Study;
use dynwm::matcore::{spectral_radius, RealMatrix};
use dynwm::plant::{synthesize_lqg, CostWeights, DiscretePlant, LqgSynthesis};
use dynwm::sampling::{stream, Gaussian};
use nalgebra::dmatrix;

pub const PHI: f64 = 1.618_033_988_749_895;

pub fn golden() -> (DiscretePlant, CostWeights, LqgSynthesis) {
    let one = || dmatrix![1.0];
    let plant = DiscretePlant::new(one(), one(), one(), one(), one(), 1.0).unwrap();
    let weights = CostWeights::identity(1, 1);
    let synthesis = synthesize_lqg(&plant, &weights).unwrap();
    (plant, weights, synthesis)
}

pub fn dc_motor() -> Study {
    ExperimentConfig::default().study().unwrap()
}

pub fn gaussian(seed: u64) -> Gaussian {
    Gaussian::new(stream(seed, 0))
}

/// Random plant with invertible A that synthesizes; retries until one does.
pub fn random_plant(g: &mut Gaussian, n: usize, m: usize, p: usize) -> (DiscretePlant, CostWeights, LqgSynthesis) {
    loop {
        let a = g.matrix(n, n) * (1.2 / (n as f64).sqrt());
        let b = g.matrix(n, m);
        let c = g.matrix(p, n);
        if a.determinant().abs() < 1e-3 {
            continue;
        }
        let q = {
            let f = g.matrix(n, n) * 0.3;
            &f * f.transpose() + RealMatrix::identity(n, n) * 0.1
        };
        let r = RealMatrix::identity(p, p) * g.uniform(0.2, 2.0);
        let Ok(plant) = DiscretePlant::new(a, b, c, q, r, 0.1) else { continue };
        let weights = CostWeights::identity(n, m);
        if let Ok(s) = synthesize_lqg(&plant, &weights) {
            return (plant, weights, s);
        }
    }
}

/// Random Schur matrix with spectral radius in [0.2, 0.9].
pub fn random_schur(g: &mut Gaussian, n: usize) -> RealMatrix {
    loop {
        let a = g.matrix(n, n);
        let rho = spectral_radius(&a).unwrap();
        if rho > 1e-6 {
            return a * (g.uniform(0.2, 0.9) / rho);
        }
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
