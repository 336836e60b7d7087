//! Command implementations behind the `aoibai` binary.

pub mod config;
pub mod experiment;
pub mod presets;

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bounds::{self, CaseStudyBound, DifficultyReport, Perturbation};
use crate::env::RestlessEnv;
use crate::error::{Error, Result};
use crate::learner::{dinkelbach_solve, DinkelbachConfig, Learner, LucbConfig, TraceWriter};
use crate::markov::check_assumptions;

pub use config::{Config, ExperimentConfig, InstanceConfig, Mode};
pub use experiment::{
    run_batch, run_trial, summarize, trial_seed, BatchOutput, InstanceContext, SummaryRecord, TrialRecord,
    TrialSpec,
};

/// Overrides given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub trace: bool,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub epsilon: Option<f64>,
}

/// Process exit code for an error: 1 invalid input model, 2 unreadable
/// config, 3 anything that failed while running.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => 2,
        Error::InvalidMatrix(_)
        | Error::NotIrreducible
        | Error::InvalidEmission(_)
        | Error::AssumptionViolated(_)
        | Error::TooFewArms(_)
        | Error::NonUniqueBestArm(..)
        | Error::InvalidParameter(_)
        | Error::DimensionMismatch { .. }
        | Error::BadFixedState { .. }
        | Error::WrongShape { .. }
        | Error::ZeroGap(_) => 1,
        _ => 3,
    }
}

/// Loads a config file, or a built-in one given as `preset:<name>`.
pub fn load_config(spec: &str) -> Result<Config> {
    match spec.strip_prefix("preset:") {
        Some(name) => presets::load(name),
        None => Config::load(Path::new(spec)),
    }
}

fn apply(cfg: &mut Config, ov: &Overrides) {
    if let Some(s) = ov.seed {
        cfg.experiment.seed = s;
    }
    if let Some(w) = ov.workers {
        cfg.experiment.workers = w;
    }
}

fn out_dir(cfg: &Config, ov: &Overrides) -> Result<PathBuf> {
    let dir = ov.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("results"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn require_instances(cfg: &Config) -> Result<()> {
    if cfg.instances.is_empty() {
        return Err(Error::Parse { key: "instance".into(), message: "missing".into() });
    }
    Ok(())
}

fn fmt_list(v: &[f64]) -> String {
    let s: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", s.join(", "))
}

/// Checks every instance and prints its diagnostics. Returns whether all
/// instances are usable.
pub fn cmd_validate(cfg: &Config, out: &mut dyn Write) -> Result<bool> {
    require_instances(cfg)?;
    let mut all_ok = true;
    for ic in &cfg.resolved_instances()? {
        writeln!(out, "instance {}", ic.id)?;
        let base = ic.base()?;
        let emission = ic.emission_map()?;
        if emission.len() != base.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), got: emission.len() });
        }
        let r = check_assumptions(&base, emission.delays());
        writeln!(
            out,
            "  irreducible={} A1={} A2={} A3={} A4={}",
            r.irreducible, r.a1, r.a2, r.a3, r.a4
        )?;
        if !r.all_hold() {
            all_ok = false;
            continue;
        }
        let ctx = match ic.build().and_then(|i| InstanceContext::new(ic.id.clone(), i, ic.init.clone())) {
            Ok(c) => c,
            Err(e) => {
                writeln!(out, "  invalid: {e}")?;
                all_ok = false;
                continue;
            }
        };
        let o = &ctx.oracle;
        let inst = &ctx.instance;
        let psi: Vec<f64> = inst.arms.iter().map(|a| a.psi_max).collect();
        writeln!(out, "  gamma_star={:.6} best_arm={}", o.gamma_star, o.best_arm)?;
        writeln!(out, "  average_aoi={}", fmt_list(&o.average_aoi))?;
        writeln!(out, "  gaps={}", fmt_list(&o.gaps))?;
        writeln!(out, "  beta_min={:.6} mu_bar={:e}", inst.beta_min, inst.mu_bar)?;
        writeln!(out, "  psi_max={}", fmt_list(&psi))?;
        writeln!(out, "  c={:e}", o.c_constant)?;
    }
    writeln!(out, "{}", if all_ok { "valid" } else { "INVALID" })?;
    Ok(all_ok)
}

#[derive(Serialize)]
struct ArmJson {
    theta: f64,
    rho: f64,
    mu_min: f64,
    psi_max: f64,
    pseudo_gap: f64,
    k_star: usize,
    stationary: Vec<f64>,
}

#[derive(Serialize)]
struct OracleJson<'a> {
    instance_id: &'a str,
    gamma_star: f64,
    best_arm: usize,
    average_aoi: &'a [f64],
    g_values: &'a [f64],
    gaps: &'a [f64],
    midpoint_xi: f64,
    c: f64,
    beta_min: f64,
    mu_bar: f64,
    arms: Vec<ArmJson>,
}

pub fn cmd_oracle(cfg: &Config, out: &mut dyn Write) -> Result<()> {
    require_instances(cfg)?;
    let mut reports = Vec::new();
    let contexts: Vec<_> = cfg.instances.iter().map(InstanceContext::from_config).collect::<Result<_>>()?;
    for ctx in &contexts {
        let o = &ctx.oracle;
        let inst = &ctx.instance;
        reports.push(OracleJson {
            instance_id: &ctx.id,
            gamma_star: o.gamma_star,
            best_arm: o.best_arm,
            average_aoi: &o.average_aoi,
            g_values: &o.g_values,
            gaps: &o.gaps,
            midpoint_xi: o.midpoint_xi,
            c: o.c_constant,
            beta_min: inst.beta_min,
            mu_bar: inst.mu_bar,
            arms: inst
                .arms
                .iter()
                .map(|a| ArmJson {
                    theta: a.theta,
                    rho: a.perron.rho,
                    mu_min: a.mu_min,
                    psi_max: a.psi_max,
                    pseudo_gap: a.spectral.pseudo_gap,
                    k_star: a.spectral.k_star,
                    stationary: a.stationary().to_vec(),
                })
                .collect(),
        });
    }
    serde_json::to_writer_pretty(&mut *out, &reports).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct RunJson {
    instance_id: String,
    algorithm: String,
    delta: f64,
    seed: u64,
    mode: &'static str,
    chosen_arm: usize,
    best_arm: usize,
    correct: bool,
    samples_total: u64,
    step2_samples: u64,
    blocks: u64,
    stopped_by: crate::learner::StopReason,
    gamma_hat: Option<f64>,
    gamma_star: f64,
    g_hat: Vec<f64>,
}

/// One run of the first listed algorithm at the first listed delta, seeded
/// with the experiment seed as is.
pub fn cmd_run(cfg: &Config, ov: &Overrides, out: &mut dyn Write) -> Result<()> {
    let mut cfg = cfg.clone();
    apply(&mut cfg, ov);
    let ic = cfg.single_instance()?;
    let ctx = InstanceContext::from_config(ic)?;
    let ex = &cfg.experiment;
    let algorithm = ex.algorithms[0];
    let delta = ex.deltas[0];
    let inst = &ctx.instance;
    let lucb = LucbConfig::new(delta, inst.c_constant(), inst.mu_bar, ctx.oracle.gamma_star)?
        .with_budget(ex.pull_budget);
    let mut env = RestlessEnv::reset(inst, ex.seed, &ctx.init)?;
    let mut trace = if ov.trace {
        let path = out_dir(&cfg, ov)?.join("trace.csv");
        let file = std::fs::File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Some(TraceWriter::new(std::io::BufWriter::new(file), inst.num_arms())?)
    } else {
        None
    };
    let mut trace_err = None;
    let mut record = |info: &crate::learner::RoundInfo<'_>| {
        if let Some(t) = trace.as_mut() {
            if let Err(e) = t.record(info) {
                trace_err.get_or_insert(e);
            }
        }
    };
    let (res, gamma_hat) = match ex.mode {
        Mode::OracleGamma => {
            let mut learner = Learner::new(algorithm, inst.num_arms())?;
            (learner.run_with(&mut env, &lucb, &mut record, |_| false)?, None)
        }
        Mode::LearnedGamma => {
            let mut dcfg = DinkelbachConfig::new(lucb, inst.emission.min(), inst.emission.max());
            dcfg.algorithm = algorithm;
            let r = dinkelbach_solve(&mut env, &dcfg, |_, info| record(info))?;
            (r.last, Some(r.gamma_hat))
        }
    };
    if let Some(e) = trace_err {
        return Err(e);
    }
    if let Some(t) = trace {
        t.finish()?;
    }
    let report = RunJson {
        instance_id: ctx.id.clone(),
        algorithm: algorithm.to_string(),
        delta,
        seed: ex.seed,
        mode: ex.mode.as_str(),
        chosen_arm: res.chosen,
        best_arm: ctx.oracle.best_arm,
        correct: res.chosen == ctx.oracle.best_arm,
        samples_total: res.tau,
        step2_samples: res.step2_samples,
        blocks: res.blocks,
        stopped_by: res.stopped_by,
        gamma_hat,
        gamma_star: ctx.oracle.gamma_star,
        g_hat: res.g_hat,
    };
    serde_json::to_writer_pretty(&mut *out, &report).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn finish_batch(batch: &BatchOutput, dir: &Path, out: &mut dyn Write) -> Result<()> {
    experiment::write_csv(&dir.join("trials.csv"), &batch.trials)?;
    experiment::write_csv(&dir.join("summary.csv"), &batch.summary)?;
    for s in &batch.summary {
        writeln!(
            out,
            "{:<16} {:<18} delta={:<8} mean={:>12.1} ci95=[{:.1}, {:.1}] err={:.3} n={}",
            s.instance_id, s.algorithm, s.delta, s.mean_samples, s.ci95_lo, s.ci95_hi, s.error_rate, s.trials
        )?;
    }
    writeln!(out, "wrote {}", dir.display())?;
    Ok(())
}

fn check_failures(batch: &BatchOutput, out: &mut dyn Write) -> Result<()> {
    if batch.failures.is_empty() {
        return Ok(());
    }
    for f in &batch.failures {
        writeln!(out, "trial failed: {f}")?;
    }
    Err(Error::Io(format!("{} trial(s) failed", batch.failures.len())))
}

pub fn batch_for(cfg: &Config, contexts: &[InstanceContext]) -> Result<BatchOutput> {
    run_batch(contexts, &cfg.experiment)
}

/// Runs the full trial grid and writes `trials.csv` and `summary.csv`.
pub fn cmd_experiment(cfg: &Config, ov: &Overrides, out: &mut dyn Write) -> Result<BatchOutput> {
    let mut cfg = cfg.clone();
    apply(&mut cfg, ov);
    require_instances(&cfg)?;
    let contexts: Vec<_> = cfg.instances.iter().map(InstanceContext::from_config).collect::<Result<_>>()?;
    let dir = out_dir(&cfg, ov)?;
    let batch = batch_for(&cfg, &contexts)?;
    finish_batch(&batch, &dir, out)?;
    check_failures(&batch, out)?;
    Ok(batch)
}

/// Bound quantities for a two-arm two-state instance.
#[derive(Debug, Clone, Serialize)]
pub struct TwoStateBounds {
    pub pseudo_gap: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub fisher: f64,
    pub epsilon: f64,
    pub lower_bound: f64,
    pub upper_bound_score: f64,
}

pub fn two_state_bounds(ctx: &InstanceContext, delta: f64, epsilon: Option<f64>) -> Result<TwoStateBounds> {
    let cs = bounds::case_study_lower_bound(&ctx.instance, delta, epsilon)?;
    let t1 = bounds::upper_bound_score(&ctx.oracle, &ctx.instance.arms, ctx.instance.mu_bar, delta)?;
    let arm = 1 - ctx.oracle.best_arm;
    Ok(TwoStateBounds {
        pseudo_gap: ctx.instance.arms[arm].spectral.pseudo_gap,
        lambda2: cs.lambda2,
        mu1: cs.mu1,
        fisher: cs.fisher,
        epsilon: cs.epsilon,
        lower_bound: cs.bound,
        upper_bound_score: t1.score,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MixingRecord {
    pub instance_id: String,
    pub algorithm: String,
    pub delta: f64,
    pub mean_samples: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub error_rate: f64,
    pub trials: u64,
    pub pseudo_gap: f64,
    pub lambda2: f64,
    pub mu1: f64,
    pub fisher: f64,
    pub epsilon: f64,
    pub lower_bound: f64,
    pub upper_bound_score: f64,
}

/// Experiment over two-arm two-state instances, with the bound quantities of
/// each instance next to its measured sample complexity in `mixing.csv`.
pub fn cmd_mixing(cfg: &Config, ov: &Overrides, out: &mut dyn Write) -> Result<Vec<MixingRecord>> {
    let mut cfg = cfg.clone();
    apply(&mut cfg, ov);
    require_instances(&cfg)?;
    let contexts: Vec<_> = cfg.instances.iter().map(InstanceContext::from_config).collect::<Result<_>>()?;
    // Shape is checked up front so a bad config fails before any simulation.
    for ctx in &contexts {
        two_state_bounds(ctx, cfg.experiment.deltas[0], None)?;
    }
    let dir = out_dir(&cfg, ov)?;
    let batch = batch_for(&cfg, &contexts)?;
    finish_batch(&batch, &dir, out)?;
    let mut rows = Vec::new();
    for s in &batch.summary {
        let ctx = contexts.iter().find(|c| c.id == s.instance_id).expect("summary of a known instance");
        let b = two_state_bounds(ctx, s.delta, None)?;
        rows.push(MixingRecord {
            instance_id: s.instance_id.clone(),
            algorithm: s.algorithm.clone(),
            delta: s.delta,
            mean_samples: s.mean_samples,
            ci95_lo: s.ci95_lo,
            ci95_hi: s.ci95_hi,
            error_rate: s.error_rate,
            trials: s.trials,
            pseudo_gap: b.pseudo_gap,
            lambda2: b.lambda2,
            mu1: b.mu1,
            fisher: b.fisher,
            epsilon: b.epsilon,
            lower_bound: b.lower_bound,
            upper_bound_score: b.upper_bound_score,
        });
    }
    experiment::write_csv(&dir.join("mixing.csv"), &rows)?;
    check_failures(&batch, out)?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceRecord {
    pub instance_id: String,
    pub kappa: u32,
    pub thetas: String,
    pub algorithm: String,
    pub delta: f64,
    pub mean_samples: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub error_rate: f64,
    pub trials: u64,
    pub min_gap: f64,
    pub upper_bound_score: f64,
}

/// The five-node family over `kappa`, built from the config's single
/// instance (its `thetas` are ignored).
pub fn cmd_instances(cfg: &Config, ov: &Overrides, out: &mut dyn Write) -> Result<Vec<InstanceRecord>> {
    let mut cfg = cfg.clone();
    apply(&mut cfg, ov);
    let kappas = cfg.kappas.clone().unwrap_or_else(|| vec![1, 2, 3, 4, 5]);
    let family = presets::kappa_instances(cfg.single_instance()?, &kappas);
    let contexts: Vec<_> = family.iter().map(InstanceContext::from_config).collect::<Result<_>>()?;
    let dir = out_dir(&cfg, ov)?;
    let batch = batch_for(&cfg, &contexts)?;
    finish_batch(&batch, &dir, out)?;
    let mut rows = Vec::new();
    for s in &batch.summary {
        let i = contexts.iter().position(|c| c.id == s.instance_id).expect("summary of a known instance");
        let ctx = &contexts[i];
        let o = &ctx.oracle;
        let min_gap = (0..o.gaps.len()).filter(|&a| a != o.best_arm).map(|a| o.gaps[a]).fold(f64::INFINITY, f64::min);
        let score = bounds::upper_bound_score(o, &ctx.instance.arms, ctx.instance.mu_bar, s.delta)?.score;
        let thetas: Vec<String> = ctx.instance.thetas.iter().map(|t| format!("{t}")).collect();
        rows.push(InstanceRecord {
            instance_id: s.instance_id.clone(),
            kappa: kappas[i],
            thetas: thetas.join(";"),
            algorithm: s.algorithm.clone(),
            delta: s.delta,
            mean_samples: s.mean_samples,
            ci95_lo: s.ci95_lo,
            ci95_hi: s.ci95_hi,
            error_rate: s.error_rate,
            trials: s.trials,
            min_gap,
            upper_bound_score: score,
        });
    }
    experiment::write_csv(&dir.join("instances.csv"), &rows)?;
    check_failures(&batch, out)?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct LowerBoundReport {
    pub instance_id: String,
    pub delta: f64,
    pub epsilon_source: &'static str,
    pub case_study: CaseStudyBound<f64>,
    /// First-order perturbation, when the derivative is usable.
    pub perturbation: Option<Perturbation<f64>>,
    pub upper_bound: DifficultyReport<f64>,
    pub note: &'static str,
}

pub fn lower_bound_report(cfg: &Config, epsilon: Option<f64>) -> Result<LowerBoundReport> {
    let ic = cfg.single_instance()?;
    let ctx = InstanceContext::from_config(ic)?;
    let delta = cfg.lower_bound.delta;
    let epsilon = epsilon.or(cfg.lower_bound.epsilon);
    let case_study = bounds::case_study_lower_bound(&ctx.instance, delta, epsilon)?;
    let perturbation = bounds::epsilon_from_gap(&ctx.instance, &ctx.oracle).ok();
    let upper_bound = bounds::upper_bound_score(&ctx.oracle, &ctx.instance.arms, ctx.instance.mu_bar, delta)?;
    Ok(LowerBoundReport {
        instance_id: ctx.id,
        delta,
        epsilon_source: if epsilon.is_some() { "override" } else { "first_order" },
        case_study,
        perturbation,
        upper_bound,
        note: "upper_bound.score is order-level: no constant factor is implied",
    })
}

pub fn cmd_lower_bound(cfg: &Config, ov: &Overrides, out: &mut dyn Write) -> Result<LowerBoundReport> {
    let report = lower_bound_report(cfg, ov.epsilon)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
    if ov.out.is_some() || cfg.output_dir.is_some() {
        let path = out_dir(cfg, ov)?.join("lower_bound.json");
        std::fs::write(&path, format!("{json}\n")).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    writeln!(out, "{json}")?;
    Ok(report)
}
