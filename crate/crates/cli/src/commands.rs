use std::fs;
use std::path::PathBuf;

use dynwm::config::ExperimentConfig;
use dynwm::experiments::{control_signal, detection_curve, loss_sweep, write_detection_summary, write_rows, Study};
use dynwm::matcore::RealMatrix;
use dynwm::plant::replay_stealthy;
use dynwm::simulate::{run_replay_attack, run_trace, NoisePlan, WatermarkMode};
use dynwm::watermark::{optimize_design, performance_loss, DesignRecord, DynamicDetectorDesign};
use dynwm::{Error, Result};
use serde::Serialize;

use crate::output::{OutputDir, Provenance};
use crate::{Command, Common};

type Rows = Vec<Vec<f64>>;

pub fn run(common: &Common, command: &Command) -> Result<()> {
    let cfg = resolve_config(common, command)?;
    let resolved = cfg.to_toml()?;
    let name = command_name(command);
    // where the files go does not change what is in them
    let hashed = ExperimentConfig {
        output: Default::default(),
        ..cfg.clone()
    }
    .to_toml()?;
    let provenance = Provenance::new(name, &hashed, cfg.monte_carlo.master_seed, common.use_paper_design);
    let out = OutputDir::create(&PathBuf::from(&cfg.output.dir), provenance)?;
    out.write(&format!("{name}.config.toml"), resolved.as_bytes())?;

    let study = cfg.study()?;
    match command {
        Command::Synthesize => synthesize(&study, &out),
        Command::Design => design(&cfg, &study, common.use_paper_design, &out),
        Command::Simulate { .. } => simulate(&cfg, &study, common.use_paper_design, &out),
        Command::Attack { .. } => attack(&cfg, &study, common.use_paper_design, &out),
        Command::DetectionCurve { .. } => curve(&cfg, &study, common.use_paper_design, &out),
        Command::ControlSignal => signal(&cfg, &study, &out),
        Command::LossSweep { .. } => sweep(&cfg, &study, &out),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Synthesize => "synthesize",
        Command::Design => "design",
        Command::Simulate { .. } => "simulate",
        Command::Attack { .. } => "attack",
        Command::DetectionCurve { .. } => "detection-curve",
        Command::ControlSignal => "control-signal",
        Command::LossSweep { .. } => "loss-sweep",
    }
}

/// Config file (or the defaults) with the command-line overrides applied,
/// validated as a whole.
fn resolve_config(common: &Common, command: &Command) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Argument(format!("cannot read config {}: {e}", path.display())))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.monte_carlo.master_seed = seed;
    }
    if let Some(runs) = common.runs {
        cfg.monte_carlo.runs = runs;
    }
    if let Some(dir) = &common.out {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    if let Some(delta) = common.delta {
        cfg.watermark.delta = delta;
    }
    match command {
        Command::Simulate { horizon: Some(h) } => cfg.monte_carlo.horizon = *h,
        Command::Attack { betas: Some(b) } | Command::DetectionCurve { betas: Some(b) } => {
            cfg.detector.betas = b.clone()
        }
        Command::LossSweep { deltas: Some(d) } => cfg.loss_sweep.deltas = d.clone(),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn rows(m: &RealMatrix) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct SynthesisReport {
    verdict: &'static str,
    gamma_spectral_radius: f64,
    gamma_eigenvalues_re: Vec<f64>,
    gamma_eigenvalues_im: Vec<f64>,
    p: Rows,
    k: Rows,
    sigma_e: Rows,
    l: Rows,
    h: Rows,
    gamma: Rows,
}

fn synthesize(study: &Study, out: &OutputDir) -> Result<()> {
    let s = &study.synthesis;
    let stealth = replay_stealthy(s)?;
    let eig = &stealth.gamma_spectrum.eigenvalues;
    let report = SynthesisReport {
        verdict: if stealth.stealthy { "stealthy" } else { "not stealthy" },
        gamma_spectral_radius: stealth.gamma_spectrum.spectral_radius,
        gamma_eigenvalues_re: eig.iter().map(|z| z.re).collect(),
        gamma_eigenvalues_im: eig.iter().map(|z| z.im).collect(),
        p: rows(&s.p),
        k: rows(&s.k),
        sigma_e: rows(&s.sigma_e),
        l: rows(&s.l),
        h: rows(&s.h),
        gamma: rows(&s.gamma),
    };
    let text = toml::to_string(&report).map_err(|e| Error::Argument(format!("cannot serialise report: {e}")))?;
    let path = out.write("synthesis.toml", text.as_bytes())?;
    print!("{text}");
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// Explicit or reference design if one is configured, otherwise the optimized
/// design for the configured δ.
fn resolve_design(cfg: &ExperimentConfig, study: &Study, paper: bool) -> Result<DynamicDetectorDesign> {
    if let Some(d) = cfg.explicit_design(paper)? {
        d.check_against(&study.plant)?;
        return Ok(d);
    }
    let delta = cfg.watermark.delta;
    eprintln!("optimizing a detector for δ = {delta}");
    let opt = optimize_design(&study.plant, &study.synthesis, &study.weights, delta, &cfg.optimize_options())?;
    Ok(opt.design)
}

fn needs_design(cfg: &ExperimentConfig) -> bool {
    use dynwm::config::ModeKind;
    match cfg.watermark.mode {
        ModeKind::None => false,
        ModeKind::Dynamic => true,
        ModeKind::Iid => cfg.watermark.iid_scale.is_none(),
    }
}

fn configured_mode(cfg: &ExperimentConfig, study: &Study, paper: bool) -> Result<WatermarkMode> {
    let design = if needs_design(cfg) { Some(resolve_design(cfg, study, paper)?) } else { None };
    cfg.mode(study, design.as_ref())
}

fn design(cfg: &ExperimentConfig, study: &Study, paper: bool, out: &OutputDir) -> Result<()> {
    let design = resolve_design(cfg, study, paper)?;
    let loss = performance_loss(&study.plant, &study.synthesis, &study.weights, &design)?;
    let delta = cfg.watermark.delta;
    let record = DesignRecord::new(&design, delta, loss.rho_delta, loss.j_tilde);
    let path = out.write("design.toml", record.to_toml()?.as_bytes())?;
    println!("rho_delta = {}", loss.rho_delta);
    println!("j_lqg = {}", loss.j_lqg);
    println!("j_tilde = {}", loss.j_tilde);
    println!("delta_loss = {}", loss.delta_loss);
    if loss.rho_delta < delta {
        eprintln!("warning: ρ(Δ) = {} is below δ = {delta}", loss.rho_delta);
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn simulate(cfg: &ExperimentConfig, study: &Study, paper: bool, out: &OutputDir) -> Result<()> {
    let mode = configured_mode(cfg, study, paper)?;
    let plan = NoisePlan::new(cfg.monte_carlo.master_seed, 0);
    let trace = run_trace(
        &study.plant,
        &study.synthesis,
        &mode,
        cfg.monte_carlo.horizon,
        &study.initial,
        plan,
        &study.options,
    )?;
    let path = out.write_with("trace.csv", |buf| trace.write_csv(buf))?;
    out.write("trace_meta.toml", trace.metadata_toml()?.as_bytes())?;
    let (w, u) = (&study.weights.w, &study.weights.u);
    println!("samples = {}", trace.len());
    println!("mean_cost = {}", trace.mean_cost(w, u, 0, trace.len()));
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn attack(cfg: &ExperimentConfig, study: &Study, paper: bool, out: &OutputDir) -> Result<()> {
    let mode = configured_mode(cfg, study, paper)?;
    let (seed, runs) = (cfg.monte_carlo.master_seed, cfg.monte_carlo.runs);
    let betas = &cfg.detector.betas;
    let summary = study.ensemble(&mode, runs, seed, betas)?;
    let path = out.write_with("attack_summary.csv", |buf| write_detection_summary(buf, &summary))?;

    let trace = run_replay_attack(
        &study.plant,
        &study.synthesis,
        &mode,
        &study.scenario,
        &study.initial,
        NoisePlan::new(seed, 0),
        &study.options,
        false,
    )?;
    out.write_with("attack_trace.csv", |buf| trace.write_csv(buf))?;
    out.write("attack_trace_meta.toml", trace.metadata_toml()?.as_bytes())?;

    println!("mode = {}, runs = {runs}", mode.label());
    for b in &summary.per_beta {
        let t = b.mean_detection_time_s.map_or("-".to_string(), |t| format!("{t:.3} s"));
        println!("beta = {:>3}  detection_rate = {:.3}  mean_time = {t}", b.beta, b.detection_rate);
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn curve(cfg: &ExperimentConfig, study: &Study, paper: bool, out: &OutputDir) -> Result<()> {
    let design = resolve_design(cfg, study, paper)?;
    let rows = detection_curve(
        study,
        &design,
        &cfg.detector.betas,
        cfg.monte_carlo.runs,
        cfg.monte_carlo.master_seed,
    )?;
    let path = out.write_with("detection_curve.csv", |buf| write_rows(buf, &rows))?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn signal(cfg: &ExperimentConfig, study: &Study, out: &OutputDir) -> Result<()> {
    let report = control_signal(study, &cfg.control_signal_options())?;
    let path = out.write_with("control_signal.csv", |buf| report.write_csv(buf))?;
    out.write_with("control_signal_summary.csv", |buf| report.write_summary_csv(buf))?;
    for m in [&report.dynamic, &report.iid] {
        println!(
            "{}: parameter = {}, detection_time_s = {:.3}, range = {}, energy = {}",
            m.method, m.parameter, m.detection_time_s, m.range, m.energy
        );
        if !m.calibrated {
            eprintln!("warning: {} could not be calibrated to the target detection time", m.method);
        }
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn sweep(cfg: &ExperimentConfig, study: &Study, out: &OutputDir) -> Result<()> {
    let rows = loss_sweep(study, &cfg.loss_sweep.deltas, &cfg.optimize_options())?;
    let path = out.write_with("loss_sweep.csv", |buf| write_rows(buf, &rows))?;
    for r in &rows {
        println!("delta = {}  rho_delta = {:.5}  delta_loss = {:.4}", r.delta, r.rho_delta, r.delta_loss);
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}
