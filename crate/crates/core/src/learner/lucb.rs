use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::env::Bandit;
use crate::error::{Error, Result};
use crate::regen::{BlockOutcome, RegenEstimator, DEFAULT_BLOCK_CAP};

pub const DEFAULT_PULL_BUDGET: u64 = 100_000_000;

/// Exploration-rate constants of the classical LUCB confidence schedule,
/// `ln(k1 * K * j^alpha / (delta * mu_bar))`.
const CLASSICAL_K1: f64 = 405.5;
const CLASSICAL_ALPHA: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    AgeAwareLucb,
    MarkovianLucb,
    MarkovianUcbBai,
    MarkovianUniform,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::AgeAwareLucb,
        Algorithm::MarkovianLucb,
        Algorithm::MarkovianUcbBai,
        Algorithm::MarkovianUniform,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::AgeAwareLucb => "age_aware_lucb",
            Algorithm::MarkovianLucb => "markovian_lucb",
            Algorithm::MarkovianUcbBai => "markovian_ucb_bai",
            Algorithm::MarkovianUniform => "markovian_uniform",
        }
    }

    /// Confidence schedule the variant's stopping test uses.
    pub fn rate(&self) -> ExplorationRate {
        match self {
            Algorithm::MarkovianLucb => ExplorationRate::Classical,
            _ => ExplorationRate::AgeAware,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExplorationRate {
    /// `ln(4 j K / (delta mu_bar))`.
    #[default]
    AgeAware,
    /// `ln(k1 K j^alpha / (delta mu_bar))` with `k1 = 405.5`, `alpha = 1.1`.
    Classical,
}

impl ExplorationRate {
    pub fn log_term(&self, j_b: u64, k: usize, delta: f64, mu_bar: f64) -> f64 {
        let j = j_b as f64;
        let k = k as f64;
        match self {
            ExplorationRate::AgeAware => (4.0 * j * k / (delta * mu_bar)).ln(),
            ExplorationRate::Classical => {
                CLASSICAL_K1.ln() + k.ln() + CLASSICAL_ALPHA * j.ln() - (delta * mu_bar).ln()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LucbConfig {
    pub delta: f64,
    pub c: f64,
    pub mu_bar: f64,
    pub gamma: f64,
    pub rate: ExplorationRate,
    pub pull_budget: Option<u64>,
    pub block_cap: u64,
}

impl LucbConfig {
    pub fn new(delta: f64, c: f64, mu_bar: f64, gamma: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta {delta} not in (0,1)")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("c {c} must be positive")));
        }
        if !(mu_bar > 0.0 && mu_bar < 1.0) {
            return Err(Error::InvalidParameter(format!("mu_bar {mu_bar} not in (0,1)")));
        }
        Ok(Self {
            delta,
            c,
            mu_bar,
            gamma,
            rate: ExplorationRate::AgeAware,
            pull_budget: Some(DEFAULT_PULL_BUDGET),
            block_cap: DEFAULT_BLOCK_CAP,
        })
    }

    pub fn with_rate(mut self, rate: ExplorationRate) -> Self {
        self.rate = rate;
        self
    }

    pub fn with_budget(mut self, budget: Option<u64>) -> Self {
        self.pull_budget = budget;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }
}

/// Estimators and global counters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LucbState {
    pub estimators: Vec<RegenEstimator>,
    /// Step-2 samples over all arms.
    pub j_b: u64,
    /// All pulls, step-1 searches included.
    pub total_pulls: u64,
    pub round: u64,
}

/// Confidence intervals and candidate pair at the current state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub g_hat: Vec<f64>,
    pub radii: Vec<f64>,
    pub lcb: Vec<f64>,
    pub ucb: Vec<f64>,
    pub h: usize,
    pub l: usize,
}

impl Snapshot {
    pub fn should_stop(&self) -> bool {
        self.ucb[self.h] <= self.lcb[self.l]
    }

    /// Arm with the smallest lower bound (lowest index on ties).
    pub fn most_optimistic(&self) -> usize {
        argmin(&self.lcb, None)
    }
}

pub(crate) fn argmin(values: &[f64], skip: Option<usize>) -> usize {
    let mut best: Option<usize> = None;
    for (a, &v) in values.iter().enumerate() {
        if Some(a) == skip {
            continue;
        }
        match best {
            Some(b) if values[b] <= v => {}
            _ => best = Some(a),
        }
    }
    best.expect("non-empty candidate set")
}

impl LucbState {
    pub fn new(k: usize) -> Self {
        Self { estimators: (0..k).map(RegenEstimator::new).collect(), j_b: 0, total_pulls: 0, round: 0 }
    }

    pub fn num_arms(&self) -> usize {
        self.estimators.len()
    }

    pub fn blocks(&self) -> u64 {
        self.estimators.iter().map(|e| e.blocks).sum()
    }

    pub fn run_block<B: Bandit + ?Sized>(
        &mut self,
        env: &mut B,
        arm: usize,
        cap: u64,
    ) -> Result<BlockOutcome> {
        let out = self.estimators[arm].run_block(env, cap)?;
        self.j_b += out.pulls_step2;
        self.total_pulls += out.pulls_total;
        Ok(out)
    }

    /// One block on every arm that has none yet, in index order.
    pub fn initialize<B: Bandit + ?Sized>(&mut self, env: &mut B, cap: u64) -> Result<()> {
        for a in 0..self.num_arms() {
            if self.estimators[a].blocks == 0 {
                self.run_block(env, a, cap)?;
            }
        }
        Ok(())
    }

    pub fn radius(&self, cfg: &LucbConfig, arm: usize) -> Result<f64> {
        let t = self.estimators[arm].t_count;
        if t == 0 || self.j_b == 0 {
            return Err(Error::NoSamples(arm));
        }
        let log = cfg.rate.log_term(self.j_b, self.num_arms(), cfg.delta, cfg.mu_bar);
        Ok((cfg.c * log / t as f64).sqrt())
    }

    pub fn snapshot(&self, cfg: &LucbConfig) -> Result<Snapshot> {
        let k = self.num_arms();
        if self.j_b == 0 {
            return Err(Error::NoSamples(0));
        }
        let scale = cfg.c * cfg.rate.log_term(self.j_b, k, cfg.delta, cfg.mu_bar);
        let mut g_hat = Vec::with_capacity(k);
        let mut radii = Vec::with_capacity(k);
        for e in &self.estimators {
            g_hat.push(e.g_hat(cfg.gamma)?);
            radii.push((scale / e.t_count as f64).sqrt());
        }
        let lcb: Vec<f64> = g_hat.iter().zip(&radii).map(|(g, r)| g - r).collect();
        let ucb: Vec<f64> = g_hat.iter().zip(&radii).map(|(g, r)| g + r).collect();
        let h = argmin(&g_hat, None);
        let l = argmin(&lcb, Some(h));
        Ok(Snapshot { g_hat, radii, lcb, ucb, h, l })
    }
}

/// Outcome of one selection round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RoundOutcome {
    Continue { h: usize, l: usize },
    Stop { h: usize },
}

/// One age-aware LUCB round: stop if `UCB_h <= LCB_l`, otherwise run one block
/// on each of `h` and `l`.
pub fn lucb_round<B: Bandit + ?Sized>(
    env: &mut B,
    state: &mut LucbState,
    cfg: &LucbConfig,
) -> Result<RoundOutcome> {
    let snap = state.snapshot(cfg)?;
    if snap.should_stop() {
        return Ok(RoundOutcome::Stop { h: snap.h });
    }
    state.run_block(env, snap.h, cfg.block_cap)?;
    state.run_block(env, snap.l, cfg.block_cap)?;
    state.round += 1;
    Ok(RoundOutcome::Continue { h: snap.h, l: snap.l })
}
