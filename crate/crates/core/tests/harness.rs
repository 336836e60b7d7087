mod common;

use std::path::Path;
use std::process::Command;

use aoibai::env::InitMode;
use aoibai::harness::config::{Config, Mode};
use aoibai::harness::experiment::{ci95_half_width, run_batch, InstanceContext, FAILED};
use aoibai::harness::{self, presets, Overrides};

const SMALL: &str = r#"
[instance]
id = "small"
states = 2
base_matrix = [0.7, 0.3, 0.4, 0.6]
delays = [0.0, 1.0]
thetas = [0.0, 1.5]

[experiment]
algorithms = ["age_aware_lucb", "markovian_uniform"]
deltas = [0.1, 0.05]
trials = 6
seed = 11
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aoibai"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn experiment_csvs(cfg: &Config, workers: usize, dir: &Path) -> (String, String) {
    let ov = Overrides { out: Some(dir.to_path_buf()), workers: Some(workers), ..Default::default() };
    harness::cmd_experiment(cfg, &ov, &mut Vec::new()).unwrap();
    (
        std::fs::read_to_string(dir.join("trials.csv")).unwrap(),
        std::fs::read_to_string(dir.join("summary.csv")).unwrap(),
    )
}

#[test]
fn csv_headers_are_stable() {
    let cfg = Config::parse(SMALL).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (trials, summary) = experiment_csvs(&cfg, 1, dir.path());
    assert_eq!(
        trials.lines().next().unwrap(),
        "instance_id,algorithm,delta,trial,seed,samples_total,step2_samples,blocks,chosen_arm,correct,gamma_hat,wall_ms"
    );
    assert_eq!(
        summary.lines().next().unwrap(),
        "instance_id,algorithm,delta,mean_samples,ci95_lo,ci95_hi,error_rate,trials"
    );
    assert_eq!(trials.lines().count(), 1 + 2 * 2 * 6);
    assert_eq!(summary.lines().count(), 1 + 2 * 2);
}

#[test]
fn worker_count_does_not_change_output() {
    let cfg = Config::parse(SMALL).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(experiment_csvs(&cfg, 1, a.path()), experiment_csvs(&cfg, 3, b.path()));
}

#[test]
fn learned_mode_reports_gamma() {
    let mut cfg = Config::parse(SMALL).unwrap();
    cfg.experiment.mode = Mode::LearnedGamma;
    cfg.experiment.trials = 2;
    cfg.experiment.algorithms.truncate(1);
    cfg.experiment.deltas.truncate(1);
    let ctx = InstanceContext::from_config(&cfg.instances[0]).unwrap();
    let out = run_batch(std::slice::from_ref(&ctx), &cfg.experiment).unwrap();
    for row in &out.trials {
        let g = row.gamma_hat.unwrap();
        assert!((g - ctx.oracle.gamma_star).abs() < 0.1 * ctx.oracle.gamma_star);
    }
}

#[test]
fn single_trial_has_degenerate_interval() {
    assert_eq!(ci95_half_width(&[5.0]), 0.0);
    let mut cfg = Config::parse(SMALL).unwrap();
    cfg.experiment.trials = 1;
    let ctx = InstanceContext::from_config(&cfg.instances[0]).unwrap();
    for s in run_batch(&[ctx], &cfg.experiment).unwrap().summary {
        assert_eq!(s.ci95_lo, s.mean_samples);
        assert_eq!(s.ci95_hi, s.mean_samples);
        assert_eq!(s.trials, 1);
    }
}

#[test]
fn failing_trials_are_marked() {
    let cfg = Config::parse(SMALL).unwrap();
    let good = InstanceContext::from_config(&cfg.instances[0]).unwrap();
    let bad = InstanceContext::new("bad", good.instance.clone(), InitMode::Fixed(vec![5, 0])).unwrap();
    let out = run_batch(&[good, bad], &cfg.experiment).unwrap();
    assert_eq!(out.failures.len(), 2 * 2 * 6);
    assert!(out.trials.iter().filter(|r| r.instance_id == "bad").all(|r| r.chosen_arm == FAILED));
    assert!(out.trials.iter().filter(|r| r.instance_id == "small").all(|r| !r.failed()));
    assert!(out.summary.iter().all(|s| s.instance_id == "small"));

    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = SMALL.replace("thetas = [0.0, 1.5]", "thetas = [0.0, 1.5]\ninit = { fixed = [5, 0] }");
    let path = write(dir.path(), "bad.toml", &bad_cfg);
    let o = bin().args(["experiment", "--config", &path, "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(std::fs::read_to_string(dir.path().join("trials.csv")).unwrap().contains(FAILED));
}

#[test]
fn age_aware_error_rate_within_guard() {
    let mut cfg = Config::parse(SMALL).unwrap();
    cfg.experiment.trials = 60;
    let ctx = InstanceContext::from_config(&cfg.instances[0]).unwrap();
    for s in run_batch(&[ctx], &cfg.experiment).unwrap().summary {
        if s.algorithm == "age_aware_lucb" {
            let guard = s.delta + 3.0 * (s.delta * (1.0 - s.delta) / s.trials as f64).sqrt();
            assert!(s.error_rate <= guard, "{s:?}");
        }
    }
}

#[test]
fn presets_match_reference_instance() {
    let cfg = presets::load("five_node").unwrap();
    let built = cfg.single_instance().unwrap().build().unwrap();
    let want = common::five_node();
    for (a, b) in built.base.as_row_major().iter().zip(want.base.as_row_major()) {
        assert!((a - b).abs() < 1e-15);
    }
    assert_eq!(built.thetas, want.thetas);
    assert_eq!(built.emission.delays(), want.emission.delays());

    let fam = presets::load("instances").unwrap().resolved_instances().unwrap();
    assert_eq!(fam.len(), 5);
    assert_eq!(fam[0].thetas.iter().filter(|&&t| t == 0.7).count(), 4);
    let mut prev = f64::INFINITY;
    for inst in &fam[1..] {
        let o = inst.build().unwrap().oracle().unwrap();
        let gap = (0..5).filter(|&a| a != o.best_arm).map(|a| o.gaps[a]).fold(f64::INFINITY, f64::min);
        assert!(gap < prev);
        prev = gap;
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let identity = SMALL.replace("[0.7, 0.3, 0.4, 0.6]", "[1.0, 0.0, 0.0, 1.0]");
    let p = write(dir.path(), "identity.toml", &identity);
    let o = bin().args(["validate", "--config", &p]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("irreducible=false"));

    let p = write(dir.path(), "garbled.toml", &SMALL.replace("[0.0, 1.5]", "[0.0, \"fast\"]"));
    let o = bin().args(["validate", "--config", &p]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("thetas"));

    let o = bin().args(["validate", "--config", "preset:five_node"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));

    let o = bin().args(["lower-bound", "--config", "preset:five_node"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));

    let o = bin()
        .args(["lower-bound", "--config", "preset:lower_bound_toy", "--epsilon", "0.1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let bound = v["case_study"]["bound"].as_f64().unwrap();
    assert!((bound - 5526.2).abs() < 0.1, "{bound}");
}

#[test]
fn mixing_records_bound_quantities() {
    let mut cfg = presets::load("mixing").unwrap();
    cfg.experiment.trials = 1;
    cfg.experiment.deltas = vec![0.1];
    let dir = tempfile::tempdir().unwrap();
    let ov = Overrides { out: Some(dir.path().to_path_buf()), ..Default::default() };
    let recs = harness::cmd_mixing(&cfg, &ov, &mut Vec::new()).unwrap();
    assert_eq!(recs.len(), 3);
    let fast = recs.iter().find(|r| r.instance_id == "fast_mixing").unwrap();
    assert!((fast.pseudo_gap - 1.0).abs() < 1e-9);
    let osc = recs.iter().find(|r| r.instance_id == "oscillatory").unwrap();
    assert!((osc.lambda2 + 0.98).abs() < 1e-12);
    assert!(osc.fisher < fast.fisher);
    assert!(dir.path().join("mixing.csv").exists());
}
