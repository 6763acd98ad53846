mod common;

use common::*;
use dynwm::matcore::{determinant, eigenvalues, RealMatrix};
use dynwm::presets::paper_design;
use dynwm::watermark::*;
use dynwm::Error;
use nalgebra::dmatrix;

fn sorted_moduli(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

#[test]
fn zero_coupling_splits_detection_spectrum() {
    let mut g = gaussian(11);
    let (plant, weights, s) = loop {
        let candidate = random_plant(&mut g, 3, 1, 1);
        if eigenvalues(&candidate.2.gamma).unwrap().spectral_radius < 1.0 {
            break candidate;
        }
    };
    let a = random_schur(&mut g, 3);
    for (m, k) in [(g.matrix(3, 1), RealMatrix::zeros(1, 3)), (RealMatrix::zeros(3, 1), g.matrix(1, 3))] {
        let design = DynamicDetectorDesign::new(a.clone(), m, k).unwrap();
        let am = assemble(&plant, &s, &weights, &design).unwrap();
        let got = sorted_moduli(eigenvalues(&am.delta).unwrap().moduli());
        let mut want = eigenvalues(&s.gamma).unwrap().moduli();
        want.extend(eigenvalues(&a).unwrap().moduli());
        let want = sorted_moduli(want);
        for (x, y) in got.iter().zip(&want) {
            assert!((x - y).abs() < 1e-9, "{got:?} vs {want:?}");
        }
        assert!(!detectability(&am, 1.0).unwrap().detectable);
    }
}

#[test]
fn scalar_determinant_identity() {
    let (plant, weights, s) = golden();
    let design = DynamicDetectorDesign::new(dmatrix![0.5], dmatrix![1.5], dmatrix![2.0]).unwrap();
    let am = assemble(&plant, &s, &weights, &design).unwrap();
    let det = determinant(&am.delta).unwrap();
    assert!((det - 0.145_898_033_750_315_5 * (0.5 + 3.0 * (PHI + 1.0))).abs() < 1e-9, "{det}");
    assert!((det - 1.2189).abs() < 1e-4);
    assert!(detectability(&am, 1.0).unwrap().detectable);
    let identity = determinant_identity(&plant, &s, &design).unwrap();
    assert!(rel(identity, det) < 1e-12);
}

#[test]
fn theorem2_scalar_product() {
    let (plant, _, s) = golden();
    let t = theorem2_construct(&plant, &s, &dmatrix![0.5], 1.2).unwrap();
    let expected = (1.2 / 0.145_898_033_750_315_5 - 0.5) / (PHI + 1.0);
    assert!((t.product - expected).abs() < 1e-9, "{}", t.product);
    assert!((t.product - 2.950).abs() < 1e-3);
    assert!((t.design.m[(0, 0)] - expected.sqrt()).abs() < 1e-12);
    assert!((t.design.k[(0, 0)] - expected.sqrt()).abs() < 1e-12);
    assert!(rel(t.det_delta, 1.2) < 1e-12);
}

#[test]
fn theorem2_degenerate_target() {
    let (plant, _, s) = golden();
    let base = s.gamma[(0, 0)] * 0.5;
    let t = theorem2_construct(&plant, &s, &dmatrix![0.5], base).unwrap();
    assert!(t.product.abs() < 1e-12);
    assert!((&t.design.m * &t.design.k).norm() < 1e-12);
}

#[test]
fn theorem2_negative_product_splits_sign() {
    let (plant, _, s) = golden();
    let t = theorem2_construct(&plant, &s, &dmatrix![0.5], -1.0).unwrap();
    assert!(t.product < 0.0);
    assert!(t.design.m[(0, 0)] > 0.0 && t.design.k[(0, 0)] < 0.0);
    assert!(rel(t.det_delta, -1.0) < 1e-12);
}

#[test]
fn theorem2_random_plants_reach_target() {
    let mut g = gaussian(21);
    for _ in 0..20 {
        let (plant, _, s) = random_plant(&mut g, 3, 1, 1);
        let a = random_schur(&mut g, 3);
        let target = g.uniform(1.1, 5.0);
        let t = theorem2_construct(&plant, &s, &a, target).unwrap();
        assert!(t.det_delta >= target * (1.0 - 1e-8), "{} < {target}", t.det_delta);
        assert!(eigenvalues(&dynwm::matcore::block(&[
            &[&s.gamma, &(&plant.b * &t.design.k)],
            &[&(-(&t.design.m * &plant.c * s.i_minus_lc(&plant))), &t.design.a]
        ]).unwrap()).unwrap().spectral_radius > 1.0);
    }
}

#[test]
fn theorem2_rejects_bad_seed() {
    let (plant, _, s) = golden();
    assert!(matches!(theorem2_construct(&plant, &s, &dmatrix![1.5], 2.0), Err(Error::Argument(_))));
    assert!(matches!(theorem2_construct(&plant, &s, &dmatrix![0.0], 2.0), Err(Error::Argument(_))));
}

#[test]
fn theorem2_singular_gamma_is_domain_error() {
    let (plant, _, mut s) = golden();
    s.gamma = dmatrix![0.0];
    assert!(matches!(theorem2_construct(&plant, &s, &dmatrix![0.5], 2.0), Err(Error::Domain(_))));
}

#[test]
fn theorem2_handles_fast_motor_mode() {
    let study = dc_motor();
    let seed = RealMatrix::identity(3, 3) * 0.5;
    let t = theorem2_for_delta(&study.plant, &study.synthesis, &seed, 1.03).unwrap();
    assert!(rel(t.det_delta, 1.03f64.powi(6)) < 1e-5, "{}", t.det_delta);
    let am = assemble(&study.plant, &study.synthesis, &study.weights, &t.design).unwrap();
    assert!(detectability(&am, 1.03).unwrap().detectable);
}

#[test]
fn zero_gain_costs_nothing() {
    let mut g = gaussian(5);
    let (plant, weights, s) = random_plant(&mut g, 3, 2, 2);
    let design = DynamicDetectorDesign::new(random_schur(&mut g, 3), g.matrix(3, 2), RealMatrix::zeros(2, 3)).unwrap();
    let loss = performance_loss(&plant, &s, &weights, &design).unwrap();
    assert!(loss.delta_loss.abs() <= 1e-10 * loss.j_lqg, "{loss:?}");
}

#[test]
fn lqg_cost_matches_riccati_trace() {
    // J* = tr(P Q) + tr(P_e K'(B'PB + U)K) with P_e the filtered error covariance
    let (plant, weights, s) = golden();
    let j = lqg_cost(&plant, &s, &weights).unwrap();
    let pe = (RealMatrix::identity(1, 1) - &s.l * &plant.c) * &s.sigma_e;
    let expected = (&s.p * &plant.q).trace()
        + (&pe * s.k.transpose() * (plant.b.transpose() * &s.p * &plant.b + &weights.u) * &s.k).trace();
    assert!(rel(j, expected) < 1e-10, "{j} vs {expected}");
}

#[test]
fn motor_lqg_cost() {
    let study = dc_motor();
    let j = lqg_cost(&study.plant, &study.synthesis, &study.weights).unwrap();
    assert!((j - 1.04).abs() < 0.05 * 1.04, "{j}");
}

#[test]
fn watermark_never_beats_lqg() {
    let mut g = gaussian(8);
    for _ in 0..20 {
        let (plant, weights, s) = random_plant(&mut g, 2, 1, 1);
        let design = DynamicDetectorDesign::new(random_schur(&mut g, 2), g.matrix(2, 1), g.matrix(1, 2)).unwrap();
        let loss = performance_loss(&plant, &s, &weights, &design).unwrap();
        assert!(loss.delta_loss >= -1e-9 * loss.j_lqg, "{loss:?}");
    }
}

#[test]
fn unstable_generator_has_no_loss() {
    let (plant, weights, s) = golden();
    let design = DynamicDetectorDesign::new(dmatrix![1.2], dmatrix![1.0], dmatrix![0.1]).unwrap();
    assert!(matches!(performance_loss(&plant, &s, &weights, &design), Err(Error::Domain(_))));
}

#[test]
fn iid_baseline_zero_target() {
    let (plant, weights, s) = golden();
    let b = iid_baseline_matched(&plant, &s, &weights, 0.0).unwrap();
    assert_eq!(b.cov, dmatrix![0.0]);
}

#[test]
fn iid_loss_is_linear() {
    let study = dc_motor();
    let (p, s, w) = (&study.plant, &study.synthesis, &study.weights);
    let j0 = lqg_cost(p, s, w).unwrap();
    let at = |c: f64| iid_loss(p, s, w, &(RealMatrix::identity(1, 1) * c)).unwrap() - j0;
    let (l1, l2) = (at(0.7), at(1.4));
    assert!((l2 - 2.0 * l1).abs() <= 1e-8 * l2.abs().max(1.0), "{l1} {l2}");
}

#[test]
fn iid_baseline_matches_target() {
    let study = dc_motor();
    let b = iid_baseline_matched(&study.plant, &study.synthesis, &study.weights, 3.9).unwrap();
    assert!((b.delta_loss - 3.9).abs() <= 1e-6 * 3.9);
    let direct = iid_loss(&study.plant, &study.synthesis, &study.weights, &b.cov).unwrap();
    assert!(rel(direct - b.j_lqg, 3.9) < 1e-6);
}

#[test]
fn optimizer_improves_on_its_seed() {
    let (plant, weights, s) = golden();
    let opts = OptimizeOptions {
        starts: 4,
        max_evals_per_round: 1500,
        ..OptimizeOptions::default()
    };
    let out = optimize_design(&plant, &s, &weights, 1.1, &opts).unwrap();
    let seed = theorem2_for_delta(&plant, &s, &dmatrix![DEFAULT_SEED_RADIUS], 1.1).unwrap();
    let seed_loss = performance_loss(&plant, &s, &weights, &seed.design).unwrap();
    assert!(out.loss.j_tilde <= seed_loss.j_tilde, "{} > {}", out.loss.j_tilde, seed_loss.j_tilde);
    assert!(out.loss.rho_delta >= 1.1);
    assert!(out.design.is_admissible().unwrap());
    let again = optimize_design(&plant, &s, &weights, 1.1, &opts).unwrap();
    assert_eq!(again, out);
}

#[test]
fn optimizer_rejects_delta_at_most_one() {
    let (plant, weights, s) = golden();
    let err = optimize_design(&plant, &s, &weights, 0.9, &OptimizeOptions::default()).unwrap_err();
    assert!(err.to_string().contains("δ must exceed 1"));
}

#[test]
fn paper_design_is_schur_and_admissible() {
    assert!(paper_design().is_admissible().unwrap());
}

#[test]
fn design_record_reloads() {
    let study = dc_motor();
    let d = paper_design();
    let loss = performance_loss(&study.plant, &study.synthesis, &study.weights, &d).unwrap();
    let rec = DesignRecord::new(&d, 1.03, loss.rho_delta, loss.j_tilde);
    let back = DesignRecord::from_toml(&rec.to_toml().unwrap()).unwrap();
    assert_eq!(back.design().unwrap(), d);
}
