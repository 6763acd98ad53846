use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matcore::{eigenvalues, RealMatrix};
use crate::plant::{CostWeights, DiscretePlant, LqgSynthesis};
use crate::sampling::{stream, Gaussian};

use super::assemble::{assemble, full_rank, DynamicDetectorDesign};
use super::construct::{default_seed, theorem2_for_delta};
use super::loss::{lqg_cost, stationary_cost, LossReport};

/// Points whose `Ã` radius reaches this are rejected outright.
const SCHUR_REJECT: f64 = 0.999;
/// Radius `Ã` is pulled back to before a new local search round.
const SCHUR_RESCALE: f64 = 0.98;
const REJECTED: f64 = 1e30;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOptions {
    /// Number of local searches; start 0 is always the rank-one construction.
    pub starts: usize,
    /// Penalty rounds per start (each restarts the simplex).
    pub rounds: usize,
    pub max_evals_per_round: usize,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub seed: u64,
    /// Detector order; defaults to the plant order.
    pub n_zeta: Option<usize>,
    /// `Ã` used by the rank-one construction; defaults to `0.5 I`.
    pub a_seed: Option<RealMatrix>,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            starts: 16,
            rounds: 5,
            max_evals_per_round: 4000,
            initial_penalty: 1e4,
            penalty_growth: 10.0,
            seed: 0,
            n_zeta: None,
            a_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedDesign {
    pub design: DynamicDetectorDesign,
    pub loss: LossReport,
    /// Index of the start that produced the returned design.
    pub start: usize,
    pub evaluations: usize,
}

struct Problem<'a> {
    plant: &'a DiscretePlant,
    synthesis: &'a LqgSynthesis,
    weights: &'a CostWeights,
    delta: f64,
    nz: usize,
}

#[derive(Clone)]
struct Best {
    j: f64,
    rho: f64,
    params: Vec<f64>,
}

impl Problem<'_> {
    fn unpack(&self, x: &[f64]) -> DynamicDetectorDesign {
        let (nz, p, m) = (self.nz, self.plant.output_dim(), self.plant.input_dim());
        let a = RealMatrix::from_row_slice(nz, nz, &x[..nz * nz]);
        let mt = RealMatrix::from_row_slice(nz, p, &x[nz * nz..nz * nz + nz * p]);
        let kt = RealMatrix::from_row_slice(m, nz, &x[nz * nz + nz * p..]);
        DynamicDetectorDesign { a, m: mt, k: kt }
    }

    fn pack(design: &DynamicDetectorDesign) -> Vec<f64> {
        let mut out = Vec::new();
        for mat in [&design.a, &design.m, &design.k] {
            for i in 0..mat.nrows() {
                for j in 0..mat.ncols() {
                    out.push(mat[(i, j)]);
                }
            }
        }
        out
    }

    /// `(J̃, ρ(Δ))`, or `None` if `Ã` is outside the admissible set or the
    /// covariance cannot be computed.
    fn evaluate(&self, design: &DynamicDetectorDesign) -> Option<(f64, f64)> {
        if design.a.iter().chain(design.m.iter()).chain(design.k.iter()).any(|v| !v.is_finite()) {
            return None;
        }
        let rho_a = eigenvalues(&design.a).ok()?.spectral_radius;
        if rho_a >= SCHUR_REJECT {
            return None;
        }
        if !full_rank(&design.a) {
            return None;
        }
        let am = assemble(self.plant, self.synthesis, self.weights, design).ok()?;
        let rho = eigenvalues(&am.delta).ok()?.spectral_radius;
        let j = stationary_cost(&am).ok()?;
        j.is_finite().then_some((j, rho))
    }

    fn local_search(&self, start: Vec<f64>, opts: &OptimizeOptions) -> (Option<Best>, usize) {
        let mut best: Option<Best> = None;
        let mut evals = 0usize;
        let mut x = start;
        let mut weight = opts.initial_penalty;
        for _ in 0..opts.rounds {
            rescale_schur(&mut x, self.nz);
            let objective = |p: &[f64]| -> f64 {
                let design = self.unpack(p);
                match self.evaluate(&design) {
                    None => REJECTED,
                    Some((j, rho)) => {
                        if rho >= self.delta && best.as_ref().is_none_or(|b| j < b.j) {
                            best = Some(Best { j, rho, params: p.to_vec() });
                        }
                        j + weight * (self.delta - rho).max(0.0).powi(2)
                    }
                }
            };
            let (xmin, used) = nelder_mead(objective, &x, opts.max_evals_per_round);
            evals += used;
            x = xmin;
            weight *= opts.penalty_growth;
        }
        (best, evals)
    }

    fn random_start(&self, opts: &OptimizeOptions, index: usize) -> Option<Vec<f64>> {
        let mut g = Gaussian::new(stream(opts.seed, index as u64));
        let (nz, p, m) = (self.nz, self.plant.output_dim(), self.plant.input_dim());
        let mut a = g.matrix(nz, nz);
        let radius = eigenvalues(&a).ok()?.spectral_radius;
        if radius == 0.0 {
            return None;
        }
        a *= g.uniform(0.3, 0.95) / radius;
        let mt = g.matrix(nz, p);
        let kt = g.matrix(m, nz);
        // walk out along the ray (s M̃, ±s K̃) until the design is detectable
        for sign in [1.0, -1.0] {
            for step in 0..200 {
                let s = 10f64.powf(-2.0 + 6.0 * step as f64 / 199.0);
                let design = DynamicDetectorDesign {
                    a: a.clone(),
                    m: &mt * s,
                    k: &kt * (sign * s),
                };
                if let Some((_, rho)) = self.evaluate(&design) {
                    if rho >= self.delta {
                        return Some(Self::pack(&design));
                    }
                }
            }
        }
        None
    }
}

fn rescale_schur(x: &mut [f64], nz: usize) {
    let a = RealMatrix::from_row_slice(nz, nz, &x[..nz * nz]);
    if let Ok(spec) = eigenvalues(&a) {
        if spec.spectral_radius > SCHUR_RESCALE {
            let f = SCHUR_RESCALE / spec.spectral_radius;
            x[..nz * nz].iter_mut().for_each(|v| *v *= f);
        }
    }
}

/// Minimises the performance loss subject to `ρ(Δ) ≥ delta` with `Ã` Schur
/// and full rank.
///
/// Multi-start Nelder–Mead on the entries of `(Ã, M̃, K̃)`. The detection
/// constraint is an exterior penalty `w max(0, δ - ρ(Δ))²` whose weight grows
/// between rounds; `Ã` leaving the Schur set is rejected, and `Ã` is pulled
/// back to radius 0.98 before each round. The best feasible point seen in
/// any evaluation is kept, so the rank-one construction that seeds start 0
/// makes the result feasible. Starts run in parallel; the result depends
/// only on the options.
pub fn optimize_design(
    plant: &DiscretePlant,
    synthesis: &LqgSynthesis,
    weights: &CostWeights,
    delta: f64,
    opts: &OptimizeOptions,
) -> Result<OptimizedDesign> {
    if !(delta.is_finite() && delta > 1.0) {
        return Err(Error::Argument(format!("δ must exceed 1, got {delta}")));
    }
    if opts.starts == 0 || opts.rounds == 0 || opts.max_evals_per_round == 0 {
        return Err(Error::Argument("optimizer needs at least one start, round and evaluation".into()));
    }
    let nz = opts.n_zeta.unwrap_or(plant.state_dim());
    let a_seed = opts.a_seed.clone().unwrap_or_else(|| default_seed(nz));
    if a_seed.shape() != (nz, nz) {
        return Err(Error::Argument(format!("seed Ã must be {nz}x{nz}")));
    }
    let problem = Problem {
        plant,
        synthesis,
        weights,
        delta,
        nz,
    };

    let seed_design = theorem2_for_delta(plant, synthesis, &a_seed, delta)?.design;
    let seed_params = Problem::pack(&seed_design);

    let results: Vec<(usize, Option<Best>, usize)> = (0..opts.starts)
        .into_par_iter()
        .map(|index| {
            let start = if index == 0 {
                Some(seed_params.clone())
            } else {
                problem.random_start(opts, index)
            };
            match start {
                Some(x) => {
                    let initial = problem
                        .evaluate(&problem.unpack(&x))
                        .filter(|&(_, rho)| rho >= delta)
                        .map(|(j, rho)| Best { j, rho, params: x.clone() });
                    let (found, evals) = problem.local_search(x, opts);
                    let best = match (initial, found) {
                        (Some(i), Some(f)) => Some(if f.j < i.j { f } else { i }),
                        (i, f) => f.or(i),
                    };
                    (index, best, evals)
                }
                None => (index, None, 0),
            }
        })
        .collect();

    let evaluations = results.iter().map(|r| r.2).sum();
    let (start, best) = results
        .into_iter()
        .filter_map(|(i, b, _)| b.map(|b| (i, b)))
        .min_by(|(ia, a), (ib, b)| a.j.total_cmp(&b.j).then(ia.cmp(ib)))
        .ok_or_else(|| Error::Numeric(format!("no design with spectral radius of Δ at least {delta} was found")))?;

    let design = problem.unpack(&best.params);
    let j_lqg = lqg_cost(plant, synthesis, weights)?;
    Ok(OptimizedDesign {
        design,
        loss: LossReport {
            j_lqg,
            j_tilde: best.j,
            delta_loss: best.j - j_lqg,
            rho_delta: best.rho,
        },
        start,
        evaluations,
    })
}

/// Nelder–Mead with dimension-adapted coefficients. Returns the best vertex
/// and the number of objective calls.
fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], max_evals: usize) -> (Vec<f64>, usize) {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let mut evals = 0usize;
    let mut call = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            REJECTED
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = call(x0, &mut evals);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] = if x[i] != 0.0 { 1.05 * x[i] } else { 0.00025 };
        let v = call(&x, &mut evals);
        simplex.push((x, v));
    }

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread_x = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread_f = simplex[1..].iter().map(|(_, v)| (v - simplex[0].1).abs()).fold(0.0, f64::max);
        if spread_x <= 1e-10 && spread_f <= 1e-12 {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / nf;
            }
        }
        let worst = simplex[n].clone();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(alpha);
        let fr = call(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(alpha * gamma);
            let fe = call(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(alpha * rho);
                let fc = call(&xc, &mut evals);
                (xc, fc)
            } else {
                let xc = along(-rho);
                let fc = call(&xc, &mut evals);
                (xc, fc)
            };
            if fc < fr.min(worst.1) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + sigma * (v - b)).collect();
                    let v = call(&x, &mut evals);
                    *vertex = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex.swap_remove(0).0, evals)
}
