//! Restless simulator: every hidden chain advances once per global step,
//! whichever arm was selected.

use std::io::Write;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::markov::{stationary_distribution, StochasticMatrix};

/// What a learner may do with an environment: pull an arm, see its delay.
pub trait Bandit {
    fn num_arms(&self) -> usize;
    /// Observes the selected arm's delay, then advances every chain one step.
    fn pull(&mut self, arm: usize) -> f64;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    #[default]
    Stationary,
    Uniform,
    Fixed(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub clock: u64,
    pub arm: usize,
    pub observation: f64,
    pub states: Option<Vec<usize>>,
}

#[derive(Debug, Clone)]
struct ArmChain {
    /// Row-wise cumulative transition probabilities scaled to `u64`.
    cdf: Vec<u64>,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
pub struct RestlessEnv {
    n_states: usize,
    delays: Vec<f64>,
    chains: Vec<ArmChain>,
    states: Vec<usize>,
    clock: u64,
    trace: Option<(bool, Vec<TraceRow>)>,
}

const SCALE: f64 = 18446744073709551616.0; // 2^64

/// Cumulative row of a probability vector, as thresholds on a uniform `u64`.
fn thresholds(row: &[f64]) -> Vec<u64> {
    let mut acc = 0.0;
    let mut out: Vec<u64> = row
        .iter()
        .map(|p| {
            acc += p;
            (acc * SCALE).min(u64::MAX as f64) as u64
        })
        .collect();
    *out.last_mut().unwrap() = u64::MAX;
    out
}

fn cumulative(p: &StochasticMatrix<f64>) -> Vec<u64> {
    (0..p.dim()).flat_map(|i| thresholds(p.row(i))).collect()
}

#[inline]
fn sample_from(cdf: &[u64], u: u64) -> usize {
    let last = cdf.len() - 1;
    cdf[..last].iter().position(|&c| u < c).unwrap_or(last)
}

impl RestlessEnv {
    /// Environment over the arms of `instance`.
    pub fn reset(instance: &ProblemInstance<f64>, seed: u64, init: &InitMode) -> Result<Self> {
        let chains: Vec<_> = instance.arms.iter().map(|a| a.chain.clone()).collect();
        let stationary: Vec<_> = instance.arms.iter().map(|a| a.stationary().to_vec()).collect();
        Self::build(&chains, instance.emission.delays().to_vec(), Some(stationary), seed, init)
    }

    /// Environment over arbitrary chains sharing one emission map. Chains need
    /// not be irreducible unless `init` is stationary.
    pub fn from_chains(
        chains: &[StochasticMatrix<f64>],
        delays: Vec<f64>,
        seed: u64,
        init: &InitMode,
    ) -> Result<Self> {
        let stationary = match init {
            InitMode::Stationary => {
                Some(chains.iter().map(stationary_distribution).collect::<Result<Vec<_>>>()?)
            }
            _ => None,
        };
        Self::build(chains, delays, stationary, seed, init)
    }

    fn build(
        chains: &[StochasticMatrix<f64>],
        delays: Vec<f64>,
        stationary: Option<Vec<Vec<f64>>>,
        seed: u64,
        init: &InitMode,
    ) -> Result<Self> {
        let n = delays.len();
        if let Some(c) = chains.iter().find(|c| c.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: c.dim() });
        }
        let k = chains.len();
        let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
        init_rng.set_stream(0);
        let states = match init {
            InitMode::Fixed(s) => {
                if s.len() != k {
                    return Err(Error::DimensionMismatch { expected: k, got: s.len() });
                }
                if let Some((arm, &state)) = s.iter().enumerate().find(|(_, &x)| x >= n) {
                    return Err(Error::BadFixedState { arm, state });
                }
                s.clone()
            }
            InitMode::Uniform => (0..k).map(|_| init_rng.random_range(0..n)).collect(),
            InitMode::Stationary => {
                let mus = stationary.expect("stationary laws supplied");
                mus.iter()
                    .map(|mu| sample_from(&thresholds(mu), init_rng.next_u64()))
                    .collect()
            }
        };
        let chains = chains
            .iter()
            .enumerate()
            .map(|(a, c)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(a as u64 + 1);
                ArmChain { cdf: cumulative(c), rng }
            })
            .collect();
        Ok(Self { n_states: n, delays, chains, states, clock: 0, trace: None })
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    /// Hidden states, for diagnostics only. Not part of [`Bandit`].
    pub fn peek_states(&self) -> &[usize] {
        &self.states
    }

    /// Starts recording one row per step; `with_states` also logs hidden states.
    pub fn enable_trace(&mut self, with_states: bool) {
        self.trace = Some((with_states, Vec::new()));
    }

    pub fn trace(&self) -> &[TraceRow] {
        self.trace.as_ref().map(|(_, rows)| rows.as_slice()).unwrap_or(&[])
    }

    pub fn write_trace_csv(&self, path: &Path) -> Result<()> {
        let with_states = self.trace.as_ref().is_some_and(|(s, _)| *s);
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(out, "clock,arm,observation")?;
        if with_states {
            for a in 0..self.chains.len() {
                write!(out, ",state_{a}")?;
            }
        }
        writeln!(out)?;
        for row in self.trace() {
            write!(out, "{},{},{}", row.clock, row.arm, row.observation)?;
            if let Some(states) = &row.states {
                for s in states {
                    write!(out, ",{s}")?;
                }
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Observe-then-transition step on `arm`.
    pub fn step(&mut self, arm: usize) -> f64 {
        assert!(arm < self.chains.len(), "arm {arm} out of range");
        let y = self.delays[self.states[arm]];
        if let Some((with_states, rows)) = &mut self.trace {
            rows.push(TraceRow {
                clock: self.clock,
                arm,
                observation: y,
                states: with_states.then(|| self.states.clone()),
            });
        }
        let n = self.n_states;
        for (s, chain) in self.states.iter_mut().zip(&mut self.chains) {
            let u = chain.rng.next_u64();
            *s = sample_from(&chain.cdf[*s * n..(*s + 1) * n], u);
        }
        self.clock += 1;
        y
    }
}

impl Bandit for RestlessEnv {
    fn num_arms(&self) -> usize {
        self.chains.len()
    }

    fn pull(&mut self, arm: usize) -> f64 {
        self.step(arm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle() -> StochasticMatrix<f64> {
        StochasticMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn fixed_init_and_cycle_observations() {
        let mut env =
            RestlessEnv::from_chains(&[cycle(), cycle()], vec![1.0, 2.0], 7, &InitMode::Fixed(vec![0, 0]))
                .unwrap();
        assert_eq!(env.peek_states(), &[0, 0]);
        assert_eq!(env.clock(), 0);
        let obs: Vec<f64> = (0..3).map(|_| env.step(0)).collect();
        assert_eq!(obs, vec![1.0, 2.0, 1.0]);
        assert_eq!(env.peek_states(), &[1, 1]);
        assert_eq!(env.clock(), 3);
    }

    #[test]
    fn idle_arm_still_moves() {
        let mut env =
            RestlessEnv::from_chains(&[cycle(), cycle()], vec![1.0, 2.0], 7, &InitMode::Fixed(vec![1, 0]))
                .unwrap();
        assert_eq!(env.peek_states(), &[1, 0]);
        env.step(0);
        env.step(0);
        assert_eq!(env.peek_states(), &[1, 0]);
        env.step(0);
        assert_eq!(env.peek_states(), &[0, 1]);
    }

    #[test]
    fn bad_fixed_state() {
        let r = RestlessEnv::from_chains(&[cycle(), cycle()], vec![1.0, 2.0], 0, &InitMode::Fixed(vec![0, 2]));
        assert!(matches!(r, Err(Error::BadFixedState { arm: 1, state: 2 })));
    }

    #[test]
    fn same_seed_same_states() {
        let p = StochasticMatrix::from_rows(&[vec![0.3, 0.7], vec![0.6, 0.4]]).unwrap();
        let chains = vec![p.clone(), p.clone(), p];
        let a = RestlessEnv::from_chains(&chains, vec![1.0, 2.0], 11, &InitMode::Uniform).unwrap();
        let b = RestlessEnv::from_chains(&chains, vec![1.0, 2.0], 11, &InitMode::Uniform).unwrap();
        assert_eq!(a.peek_states(), b.peek_states());
    }

    #[test]
    fn trace_records_steps() {
        let mut env =
            RestlessEnv::from_chains(&[cycle(), cycle()], vec![1.0, 2.0], 0, &InitMode::Fixed(vec![0, 1]))
                .unwrap();
        env.enable_trace(true);
        env.step(1);
        env.step(0);
        let t = env.trace();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0], TraceRow { clock: 0, arm: 1, observation: 2.0, states: Some(vec![0, 1]) });
        assert_eq!(t[1].observation, 2.0);
    }
}
