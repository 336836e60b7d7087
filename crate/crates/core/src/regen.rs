//! Regeneration sampling and the per-arm cost estimators.
//!
//! Each block starts at the arm's regenerative observation (its first-ever
//! delay) and ends on the next return to it. Estimators are kept as sums so
//! `eta_hat` can be re-evaluated at any `gamma` without resampling.

use serde::{Deserialize, Serialize};

use crate::env::Bandit;
use crate::error::{Error, Result};

pub const DEFAULT_BLOCK_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegenEstimator {
    pub arm: usize,
    pub regen_obs: Option<f64>,
    pub sum_half_sq: f64,
    pub sum_y: f64,
    pub sum_pair: f64,
    pub t_count: u64,
    pub pair_count: u64,
    pub blocks: u64,
    pub pending: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockOutcome {
    pub arm: usize,
    /// Pulls spent searching for the regenerative observation.
    pub pulls_step1: u64,
    /// Pulls that entered the estimators (regenerative observation included).
    pub pulls_step2: u64,
    /// All pulls of the block, closing pull included.
    pub pulls_total: u64,
}

impl RegenEstimator {
    pub fn new(arm: usize) -> Self {
        Self {
            arm,
            regen_obs: None,
            sum_half_sq: 0.0,
            sum_y: 0.0,
            sum_pair: 0.0,
            t_count: 0,
            pair_count: 0,
            blocks: 0,
            pending: None,
        }
    }

    fn push_sample(&mut self, y: f64) {
        self.sum_half_sq += 0.5 * y * y;
        self.sum_y += y;
        self.t_count += 1;
        if let Some(prev) = self.pending {
            self.sum_pair += prev * y;
            self.pair_count += 1;
        }
        self.pending = Some(y);
    }

    fn close(&mut self, regen: f64) {
        let prev = self.pending.take().expect("open block");
        self.sum_pair += prev * regen;
        self.pair_count += 1;
        self.blocks += 1;
    }

    /// Runs one regeneration block on this estimator's arm.
    pub fn run_block<B: Bandit + ?Sized>(&mut self, env: &mut B, cap: u64) -> Result<BlockOutcome> {
        let arm = self.arm;
        let overrun = Error::BlockOverrun { arm, cap };
        let mut pulls = 0u64;
        let mut pull = |env: &mut B| -> Result<f64> {
            if pulls >= cap {
                return Err(overrun.clone());
            }
            pulls += 1;
            Ok(env.pull(arm))
        };

        let mut step1 = 0u64;
        let regen = match self.regen_obs {
            None => {
                let y = pull(env)?;
                self.regen_obs = Some(y);
                y
            }
            Some(r) => {
                while pull(env)? != r {
                    step1 += 1;
                }
                r
            }
        };
        self.push_sample(regen);
        let mut step2 = 1u64;
        loop {
            let y = pull(env)?;
            if y == regen {
                self.close(regen);
                break;
            }
            self.push_sample(y);
            step2 += 1;
        }
        Ok(BlockOutcome { arm, pulls_step1: step1, pulls_step2: step2, pulls_total: step1 + step2 + 1 })
    }

    pub fn eta_hat(&self, gamma: f64) -> Result<f64> {
        if self.t_count == 0 {
            return Err(Error::NoSamples(self.arm));
        }
        Ok((self.sum_half_sq - gamma * self.sum_y) / self.t_count as f64)
    }

    pub fn gamma_hat(&self) -> Result<f64> {
        if self.pair_count == 0 {
            return Err(Error::NoSamples(self.arm));
        }
        Ok(self.sum_pair / self.pair_count as f64)
    }

    pub fn g_hat(&self, gamma: f64) -> Result<f64> {
        Ok(self.eta_hat(gamma)? + self.gamma_hat()?)
    }

    /// Mean observed delay over step-2 samples.
    pub fn mean_y(&self) -> Result<f64> {
        if self.t_count == 0 {
            return Err(Error::NoSamples(self.arm));
        }
        Ok(self.sum_y / self.t_count as f64)
    }
}
