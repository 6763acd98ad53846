use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dynwm::config::ExperimentConfig;
use dynwm::watermark::DesignRecord;
use tempfile::TempDir;

// Scalar plant A = B = C = Q = R = 1 with a short replay window, so every
// subcommand finishes quickly.
const SCALAR: &str = r#"
[plant]
model = "discrete"
ts = 0.1
a = [[1.0]]
b = [[1.0]]
c = [[1.0]]

[noise]
q = [[1.0]]
r = [[1.0]]

[detector]
window = 10
betas = [1, 2]

[attack]
tau = 60

[watermark]
mode = "dynamic"
delta = 1.05
n_zeta = 1

[watermark.optimizer]
starts = 2
rounds = 2
max_evals_per_round = 300

[monte_carlo]
runs = 6
warmup = 50
horizon = 80

[control_signal]
beta = 2
target_time_s = 1.0
calibration_runs = 4
max_iterations = 4
horizon = 40

[loss_sweep]
deltas = [1.05]
"#;

fn dynwm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynwm"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn scalar_dir() -> TempDir {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("scalar.toml"), SCALAR).unwrap();
    dir
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Data lines of an emitted CSV: header comments and the column row removed.
fn csv_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).collect()
}

#[test]
fn synthesize_scalar_reports_golden_gain() {
    let dir = scalar_dir();
    let o = dynwm(dir.path(), &["synthesize", "--config", "scalar.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/synthesis.toml")).unwrap();
    assert!(text.contains("verdict = \"stealthy\""));
    let k: f64 = text
        .lines()
        .find(|l| l.starts_with("k = "))
        .and_then(|l| l.trim_start_matches("k = [[").trim_end_matches("]]").parse().ok())
        .unwrap();
    assert!((k + 0.618_034).abs() < 1e-6, "{k}");
}

#[test]
fn synthesize_motor_preset_is_stealthy() {
    let dir = TempDir::new().unwrap();
    let o = dynwm(dir.path(), &["synthesize"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("verdict = \"stealthy\""));
}

#[test]
fn unobservable_plant_is_a_synthesis_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = SCALAR.replace("c = [[1.0]]", "c = [[0.0]]");
    fs::write(dir.path().join("bad.toml"), cfg).unwrap();
    let o = dynwm(dir.path(), &["synthesize", "--config", "bad.toml"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn delta_at_most_one_is_a_usage_error() {
    let dir = scalar_dir();
    let o = dynwm(dir.path(), &["design", "--config", "scalar.toml", "--delta", "0.9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("δ must exceed 1"), "{}", stderr(&o));
}

#[test]
fn schema_violations_name_the_field() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("a.toml"), "[detector]\nalpha = 1.5\n").unwrap();
    let o = dynwm(dir.path(), &["synthesize", "--config", "a.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("detector.alpha"), "{}", stderr(&o));

    fs::write(dir.path().join("b.toml"), "[detector]\nwindoww = 10\n").unwrap();
    let o = dynwm(dir.path(), &["synthesize", "--config", "b.toml"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("windoww"), "{}", stderr(&o));

    let o = dynwm(dir.path(), &["synthesize", "--config", "missing.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let o = dynwm(dir.path(), &["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn design_record_is_feasible_and_reusable() {
    let dir = scalar_dir();
    let o = dynwm(dir.path(), &["design", "--config", "scalar.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/design.toml")).unwrap();
    let rec = DesignRecord::from_toml(&text).unwrap();
    assert!(rec.rho_delta >= 1.05, "{}", rec.rho_delta);
    assert_eq!(rec.n_zeta, 1);

    // feed the record back through the config
    let cfg = format!("{SCALAR}\n").replace(
        "[watermark]\n",
        "[watermark]\ndesign_file = \"out/design.toml\"\n",
    );
    fs::write(dir.path().join("with_design.toml"), cfg).unwrap();
    let o = dynwm(dir.path(), &["detection-curve", "--config", "with_design.toml", "--out", "curve"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!stderr(&o).contains("optimizing"));
}

#[test]
fn paper_design_is_loaded_verbatim() {
    let dir = TempDir::new().unwrap();
    let o = dynwm(dir.path(), &["design", "--use-paper-design"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rec = DesignRecord::from_toml(&fs::read_to_string(dir.path().join("out/design.toml")).unwrap()).unwrap();
    assert_eq!(rec.a[0], vec![0.48, -0.81, 0.02]);
    assert_eq!(rec.k[0], vec![0.9, -0.1, 0.35]);
    assert!(rec.rho_delta > 1.0);
}

#[test]
fn detection_curve_is_byte_identical_on_rerun() {
    let dir = scalar_dir();
    let run = |out: &str| {
        let o = dynwm(dir.path(), &["detection-curve", "--config", "scalar.toml", "--out", out, "--seed", "7"]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(dir.path().join(out).join("detection_curve.csv")).unwrap()
    };
    let (a, b) = (run("first"), run("second"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# dynwm "));
    assert_eq!(lines.next().unwrap(), "# command: detection-curve");
    assert!(lines.next().unwrap().starts_with("# config_sha256: "));
    assert_eq!(lines.next().unwrap(), "# master_seed: 7");
    assert_eq!(lines.next().unwrap(), "beta,method,detection_rate,mean_detection_time_s,censored_fraction");
    // two betas, two methods
    assert_eq!(csv_rows(&text).len(), 4);
}

#[test]
fn seed_changes_the_hash_and_the_results() {
    let dir = scalar_dir();
    for (out, seed) in [("s1", "1"), ("s2", "2")] {
        let o = dynwm(dir.path(), &["simulate", "--config", "scalar.toml", "--out", out, "--seed", seed]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = fs::read_to_string(dir.path().join("s1/trace.csv")).unwrap();
    let b = fs::read_to_string(dir.path().join("s2/trace.csv")).unwrap();
    assert_ne!(a.lines().nth(2), b.lines().nth(2));
    assert_ne!(csv_rows(&a), csv_rows(&b));
    assert_eq!(csv_rows(&a).len(), 80);
}

#[test]
fn attack_writes_summary_and_trace() {
    let dir = scalar_dir();
    let o = dynwm(dir.path(), &["attack", "--config", "scalar.toml", "--runs", "3", "--betas", "1,2,5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(dir.path().join("out/attack_summary.csv")).unwrap();
    assert_eq!(csv_rows(&summary).len(), 3);
    let trace = fs::read_to_string(dir.path().join("out/attack_trace.csv")).unwrap();
    // recording plus replay
    assert_eq!(csv_rows(&trace).len(), 120);
    let meta = fs::read_to_string(dir.path().join("out/attack_trace_meta.toml")).unwrap();
    assert!(meta.contains("tau = 60"));
}

#[test]
fn loss_sweep_single_point_is_one_row() {
    let dir = scalar_dir();
    let o = dynwm(dir.path(), &["loss-sweep", "--config", "scalar.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/loss_sweep.csv")).unwrap();
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 1);
    let fields: Vec<f64> = rows[0].split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(fields[0], 1.05);
    assert!(fields[1] >= 1.05);
    assert!(fields[3] >= 0.0);
}

#[test]
fn control_signal_rows_match_horizon() {
    let dir = scalar_dir();
    let o = dynwm(dir.path(), &["control-signal", "--config", "scalar.toml"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("out/control_signal.csv")).unwrap();
    assert_eq!(csv_rows(&text).len(), 40);
    let summary = fs::read_to_string(dir.path().join("out/control_signal_summary.csv")).unwrap();
    assert_eq!(csv_rows(&summary).len(), 2);
}

#[test]
fn motor_preset_round_trips_exactly() {
    let dir = TempDir::new().unwrap();
    let o = dynwm(dir.path(), &["synthesize"]);
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("out/synthesize.config.toml")).unwrap();
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
    let m = &cfg.plant.motor;
    assert_eq!((m.b, m.j, m.l, m.kb, m.kt, m.r), (3.5e-6, 3.23e-6, 2.75e-6, 0.0274, 0.0274, 4.0));
    assert_eq!(cfg.plant.ts, 0.01);
    assert_eq!((cfg.detector.alpha, cfg.detector.window, cfg.attack.tau), (0.01, 100, 1500));
    assert_eq!(cfg.watermark.delta, 1.03);
}
