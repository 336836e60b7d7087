use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, InstanceConfig, Mode};
use crate::env::{InitMode, RestlessEnv};
use crate::error::{Error, Result};
use crate::instance::{OracleReport, ProblemInstance};
use crate::learner::{dinkelbach_solve, run_bai, Algorithm, DinkelbachConfig, LucbConfig};

/// Marker written in `chosen_arm` for a trial that errored or panicked.
pub const FAILED: &str = "FAILED";

/// A built instance together with its ground truth.
#[derive(Debug, Clone)]
pub struct InstanceContext {
    pub id: String,
    pub instance: ProblemInstance<f64>,
    pub oracle: OracleReport<f64>,
    pub init: InitMode,
}

impl InstanceContext {
    pub fn new(id: impl Into<String>, instance: ProblemInstance<f64>, init: InitMode) -> Result<Self> {
        let oracle = instance.oracle()?;
        Ok(Self { id: id.into(), instance, oracle, init })
    }

    pub fn from_config(cfg: &InstanceConfig) -> Result<Self> {
        Self::new(cfg.id.clone(), cfg.build()?, cfg.init.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub algorithm: Algorithm,
    pub delta: f64,
    pub trial: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub instance_id: String,
    pub algorithm: String,
    pub delta: f64,
    pub trial: u64,
    pub seed: u64,
    pub samples_total: u64,
    pub step2_samples: u64,
    pub blocks: u64,
    pub chosen_arm: String,
    pub correct: bool,
    pub gamma_hat: Option<f64>,
    pub wall_ms: u64,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.chosen_arm == FAILED
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub instance_id: String,
    pub algorithm: String,
    pub delta: f64,
    pub mean_samples: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub error_rate: f64,
    pub trials: u64,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable per-trial seed. Depends only on its arguments, so adding groups to
/// a config never changes the streams of existing ones.
pub fn trial_seed(base_seed: u64, instance_id: &str, algorithm: Algorithm, delta: f64, trial: u64) -> u64 {
    let mut h = FNV_OFFSET;
    h = fnv1a(h, instance_id.as_bytes());
    h = fnv1a(h, &[0xff]);
    h = fnv1a(h, algorithm.as_str().as_bytes());
    h = fnv1a(h, &[0xff]);
    h = fnv1a(h, &delta.to_bits().to_le_bytes());
    h = fnv1a(h, &trial.to_le_bytes());
    splitmix64(base_seed ^ h)
}

/// Runs one trial. `gamma_hat` is only filled in learned mode.
pub fn run_trial(
    ctx: &InstanceContext,
    spec: &TrialSpec,
    mode: Mode,
    pull_budget: Option<u64>,
) -> Result<TrialRecord> {
    let inst = &ctx.instance;
    let lucb = LucbConfig::new(spec.delta, inst.c_constant(), inst.mu_bar, ctx.oracle.gamma_star)?
        .with_budget(pull_budget);
    let mut env = RestlessEnv::reset(inst, spec.seed, &ctx.init)?;
    let (res, gamma_hat) = match mode {
        Mode::OracleGamma => (run_bai(&mut env, &lucb, spec.algorithm)?, None),
        Mode::LearnedGamma => {
            let mut cfg = DinkelbachConfig::new(lucb, inst.emission.min(), inst.emission.max());
            cfg.algorithm = spec.algorithm;
            let out = dinkelbach_solve(&mut env, &cfg, |_, _| {})?;
            (out.last, Some(out.gamma_hat))
        }
    };
    Ok(TrialRecord {
        instance_id: ctx.id.clone(),
        algorithm: spec.algorithm.as_str().to_string(),
        delta: spec.delta,
        trial: spec.trial,
        seed: spec.seed,
        samples_total: res.tau,
        step2_samples: res.step2_samples,
        blocks: res.blocks,
        chosen_arm: res.chosen.to_string(),
        correct: res.chosen == ctx.oracle.best_arm,
        gamma_hat,
        wall_ms: 0,
    })
}

fn failure_row(ctx: &InstanceContext, spec: &TrialSpec) -> TrialRecord {
    TrialRecord {
        instance_id: ctx.id.clone(),
        algorithm: spec.algorithm.as_str().to_string(),
        delta: spec.delta,
        trial: spec.trial,
        seed: spec.seed,
        samples_total: 0,
        step2_samples: 0,
        blocks: 0,
        chosen_arm: FAILED.to_string(),
        correct: false,
        gamma_hat: None,
        wall_ms: 0,
    }
}

/// Every trial of a batch plus the errors of those that failed.
#[derive(Debug, Clone)]
pub struct BatchOutput {
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<SummaryRecord>,
    pub failures: Vec<String>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

/// Runs every (instance, algorithm, delta, trial) of `cfg`. Rows come back
/// sorted by group in config order, then by trial.
pub fn run_batch(contexts: &[InstanceContext], cfg: &ExperimentConfig) -> Result<BatchOutput> {
    let mut jobs = Vec::new();
    for (ii, ctx) in contexts.iter().enumerate() {
        for (ai, &algorithm) in cfg.algorithms.iter().enumerate() {
            for (di, &delta) in cfg.deltas.iter().enumerate() {
                for trial in 0..cfg.trials {
                    let seed = trial_seed(cfg.seed, &ctx.id, algorithm, delta, trial);
                    jobs.push(((ii, ai, di, trial), TrialSpec { algorithm, delta, trial, seed }));
                }
            }
        }
    }
    let run = |(key, spec): &((usize, usize, usize, u64), TrialSpec)| {
        let ctx = &contexts[key.0];
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(|| run_trial(ctx, spec, cfg.mode, cfg.pull_budget)));
        let elapsed = start.elapsed().as_millis() as u64;
        let (mut row, err) = match out {
            Ok(Ok(row)) => (row, None),
            Ok(Err(e)) => (failure_row(ctx, spec), Some(e.to_string())),
            Err(p) => {
                let msg = p
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| p.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "panic".into());
                (failure_row(ctx, spec), Some(format!("panic: {msg}")))
            }
        };
        if cfg.wall_time {
            row.wall_ms = elapsed;
        }
        let err = err.map(|e| format!("{} {} delta={} trial={}: {e}", ctx.id, spec.algorithm, spec.delta, spec.trial));
        (*key, row, err)
    };
    let workers = if cfg.workers == 0 { rayon::current_num_threads() } else { cfg.workers };
    let mut rows: Vec<_> = pool(workers)?.install(|| jobs.par_iter().map(run).collect());
    rows.sort_by_key(|r| r.0);
    let failures = rows.iter().filter_map(|r| r.2.clone()).collect();
    let trials: Vec<TrialRecord> = rows.into_iter().map(|r| r.1).collect();
    let summary = summarize(&trials);
    Ok(BatchOutput { trials, summary, failures })
}

/// Normal-approximation 95% interval half-width of the mean.
pub fn ci95_half_width(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    1.96 * (var / n as f64).sqrt()
}

/// One summary row per consecutive `(instance, algorithm, delta)` group of
/// successful trials.
pub fn summarize(trials: &[TrialRecord]) -> Vec<SummaryRecord> {
    let mut out = Vec::new();
    let ok: Vec<&TrialRecord> = trials.iter().filter(|t| !t.failed()).collect();
    let mut start = 0;
    while start < ok.len() {
        let key = |t: &TrialRecord| (t.instance_id.clone(), t.algorithm.clone(), t.delta.to_bits());
        let k = key(ok[start]);
        let mut end = start;
        while end < ok.len() && key(ok[end]) == k {
            end += 1;
        }
        let group = &ok[start..end];
        let samples: Vec<f64> = group.iter().map(|t| t.samples_total as f64).collect();
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let hw = ci95_half_width(&samples);
        let errors = group.iter().filter(|t| !t.correct).count() as f64;
        out.push(SummaryRecord {
            instance_id: group[0].instance_id.clone(),
            algorithm: group[0].algorithm.clone(),
            delta: group[0].delta,
            mean_samples: mean,
            ci95_lo: mean - hw,
            ci95_hi: mean + hw,
            error_rate: errors / n,
            trials: group.len() as u64,
        });
        start = end;
    }
    out
}

pub fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
