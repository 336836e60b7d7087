//! Fixed-confidence best-arm identification on regeneration estimators.

mod dinkelbach;
mod lucb;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::env::Bandit;
use crate::error::{Error, Result};

pub use dinkelbach::{default_bracket, dinkelbach_solve, DinkelbachConfig, DinkelbachResult, Iterate};
pub use lucb::{
    lucb_round, Algorithm, ExplorationRate, LucbConfig, LucbState, RoundOutcome, Snapshot,
    DEFAULT_PULL_BUDGET,
};

/// Optimism multiplier `1 + beta` (with `beta = 1`) on the radius in the
/// UCB-style sampling index `g_hat - (1 + beta) rad`.
const UCB_BONUS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Confidence,
    Budget,
    /// Dinkelbach iterate ended because the sign of `J` was already certain.
    SignCertified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaiResult {
    pub chosen: usize,
    pub tau: u64,
    pub step2_samples: u64,
    pub blocks: u64,
    pub rounds: u64,
    pub stopped_by: StopReason,
    /// Per-arm `(LCB, UCB)` when the run ended.
    pub final_intervals: Vec<(f64, f64)>,
    pub g_hat: Vec<f64>,
}

/// State seen by an observer before each round's sampling decision.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundInfo<'a> {
    pub round: u64,
    pub total_pulls: u64,
    pub j_b: u64,
    pub snapshot: &'a Snapshot,
    /// Arms the round is about to sample (empty when the run stops).
    pub selected: &'a [usize],
}

/// A resumable run of one algorithm.
#[derive(Debug, Clone)]
pub struct Learner {
    pub algorithm: Algorithm,
    pub state: LucbState,
}

impl Learner {
    pub fn new(algorithm: Algorithm, num_arms: usize) -> Result<Self> {
        if num_arms < 2 {
            return Err(Error::TooFewArms(num_arms));
        }
        Ok(Self { algorithm, state: LucbState::new(num_arms) })
    }

    fn select(&self, snap: &Snapshot) -> Vec<usize> {
        let k = self.state.num_arms();
        match self.algorithm {
            Algorithm::AgeAwareLucb | Algorithm::MarkovianLucb => vec![snap.h, snap.l],
            Algorithm::MarkovianUniform => vec![(self.state.round % k as u64) as usize],
            Algorithm::MarkovianUcbBai => {
                let index: Vec<f64> = (0..k)
                    .map(|a| snap.g_hat[a] - UCB_BONUS * snap.radii[a])
                    .collect();
                vec![lucb::argmin(&index, None)]
            }
        }
    }

    /// Runs until the stopping test fires or the budget is spent. `stop_early`
    /// may end the run on a snapshot before the test fires.
    pub fn run_with<B, O, S>(
        &mut self,
        env: &mut B,
        cfg: &LucbConfig,
        mut observer: O,
        mut stop_early: S,
    ) -> Result<BaiResult>
    where
        B: Bandit + ?Sized,
        O: FnMut(&RoundInfo<'_>),
        S: FnMut(&Snapshot) -> bool,
    {
        if env.num_arms() != self.state.num_arms() {
            return Err(Error::DimensionMismatch { expected: self.state.num_arms(), got: env.num_arms() });
        }
        let cfg = cfg.clone().with_rate(self.algorithm.rate());
        self.state.initialize(env, cfg.block_cap)?;
        loop {
            let snap = self.state.snapshot(&cfg)?;
            let reason = if snap.should_stop() {
                Some(StopReason::Confidence)
            } else if cfg.pull_budget.is_some_and(|b| self.state.total_pulls >= b) {
                Some(StopReason::Budget)
            } else if stop_early(&snap) {
                Some(StopReason::SignCertified)
            } else {
                None
            };
            if let Some(stopped_by) = reason {
                observer(&RoundInfo {
                    round: self.state.round,
                    total_pulls: self.state.total_pulls,
                    j_b: self.state.j_b,
                    snapshot: &snap,
                    selected: &[],
                });
                return Ok(self.result(&snap, stopped_by));
            }
            let selected = self.select(&snap);
            observer(&RoundInfo {
                round: self.state.round,
                total_pulls: self.state.total_pulls,
                j_b: self.state.j_b,
                snapshot: &snap,
                selected: &selected,
            });
            for &a in &selected {
                self.state.run_block(env, a, cfg.block_cap)?;
            }
            self.state.round += 1;
        }
    }

    pub fn run<B: Bandit + ?Sized>(&mut self, env: &mut B, cfg: &LucbConfig) -> Result<BaiResult> {
        self.run_with(env, cfg, |_| {}, |_| false)
    }

    fn result(&self, snap: &Snapshot, stopped_by: StopReason) -> BaiResult {
        BaiResult {
            chosen: snap.h,
            tau: self.state.total_pulls,
            step2_samples: self.state.j_b,
            blocks: self.state.blocks(),
            rounds: self.state.round,
            stopped_by,
            final_intervals: snap.lcb.iter().copied().zip(snap.ucb.iter().copied()).collect(),
            g_hat: snap.g_hat.clone(),
        }
    }
}

/// Runs `algorithm` from scratch on `env`.
pub fn run_bai<B: Bandit + ?Sized>(env: &mut B, cfg: &LucbConfig, algorithm: Algorithm) -> Result<BaiResult> {
    Learner::new(algorithm, env.num_arms())?.run(env, cfg)
}

/// CSV writer for per-round traces: round, pulls, selected arms and the
/// per-arm `g_hat`, radius, LCB and UCB columns.
pub struct TraceWriter<W: Write> {
    out: W,
    k: usize,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(mut out: W, k: usize) -> Result<Self> {
        write!(out, "round,total_pulls,j_b,selected")?;
        for a in 0..k {
            write!(out, ",g_hat_{a},radius_{a},lcb_{a},ucb_{a}")?;
        }
        writeln!(out)?;
        Ok(Self { out, k })
    }

    pub fn record(&mut self, info: &RoundInfo<'_>) -> Result<()> {
        let sel: Vec<String> = info.selected.iter().map(|a| a.to_string()).collect();
        write!(self.out, "{},{},{},{}", info.round, info.total_pulls, info.j_b, sel.join(";"))?;
        let s = info.snapshot;
        for a in 0..self.k {
            write!(self.out, ",{},{},{},{}", s.g_hat[a], s.radii[a], s.lcb[a], s.ucb[a])?;
        }
        writeln!(self.out)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}
