use serde::{Deserialize, Serialize};

use super::{Algorithm, BaiResult, Learner, LucbConfig, RoundInfo, StopReason};
use crate::env::Bandit;
use crate::error::{Error, Result};

/// Bracket that contains the AoI ratio of any delay sequence in
/// `[fmin, fmax]`, widened by `margin` on both sides. The upper end is
/// infinite when `fmin <= 0`; [`dinkelbach_solve`] then replaces it with one
/// read off the initial estimates.
pub fn default_bracket(fmin: f64, fmax: f64, margin: f64) -> (f64, f64) {
    let hi = if fmin > 0.0 { 1.5 * fmax * fmax / fmin + margin } else { f64::INFINITY };
    (1.5 * fmin * fmin / fmax - margin, hi)
}

/// Smallest per-arm root of the estimated affine costs.
fn empirical_root(learner: &Learner) -> Result<f64> {
    let mut best = f64::INFINITY;
    for e in &learner.state.estimators {
        let m = e.mean_y()?;
        if m > 0.0 {
            best = best.min((e.eta_hat(0.0)? + e.gamma_hat()?) / m);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DinkelbachConfig {
    /// LUCB settings; its `gamma` is overwritten at every iterate.
    pub lucb: LucbConfig,
    pub bracket: (f64, f64),
    pub tol_gamma: f64,
    pub tol_j: f64,
    pub max_iterations: usize,
    pub algorithm: Algorithm,
}

impl DinkelbachConfig {
    pub fn new(lucb: LucbConfig, fmin: f64, fmax: f64) -> Self {
        Self {
            lucb,
            bracket: default_bracket(fmin, fmax, 1.0),
            tol_gamma: 1e-6,
            tol_j: 0.0,
            max_iterations: 200,
            algorithm: Algorithm::AgeAwareLucb,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Iterate {
    pub gamma: f64,
    pub j_hat: f64,
    pub chosen: usize,
    pub tau: u64,
    pub stopped_by: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DinkelbachResult {
    pub gamma_hat: f64,
    pub chosen: usize,
    pub bracket: (f64, f64),
    pub iterations: Vec<Iterate>,
    pub last: BaiResult,
}

/// Bisection on `gamma` with one LUCB run per iterate. Estimators carry over
/// between iterates; an iterate also ends as soon as every lower bound is
/// positive or some upper bound is negative, since the sign of `J` is then
/// settled.
pub fn dinkelbach_solve<B, O>(env: &mut B, cfg: &DinkelbachConfig, mut observer: O) -> Result<DinkelbachResult>
where
    B: Bandit + ?Sized,
    O: FnMut(f64, &RoundInfo<'_>),
{
    let (mut lo, mut hi) = cfg.bracket;
    if !(lo < hi) {
        return Err(Error::BadBracket { lo, hi });
    }
    let mut learner = Learner::new(cfg.algorithm, env.num_arms())?;
    learner.state.initialize(env, cfg.lucb.block_cap)?;
    let j_at = |learner: &Learner, gamma: f64| -> Result<f64> {
        learner
            .state
            .estimators
            .iter()
            .map(|e| e.g_hat(gamma))
            .try_fold(f64::INFINITY, |m, g| g.map(|g| m.min(g)))
    };
    if hi.is_infinite() {
        hi = 2.0 * empirical_root(&learner)?.max(0.0) + 1.0;
    }
    if !(j_at(&learner, lo)? > 0.0 && j_at(&learner, hi)? < 0.0) {
        return Err(Error::BadBracket { lo, hi });
    }

    let mut iterations = Vec::new();
    let mut last = None;
    for _ in 0..cfg.max_iterations {
        let gamma = 0.5 * (lo + hi);
        let lucb = cfg.lucb.clone().with_gamma(gamma);
        let res = learner.run_with(
            env,
            &lucb,
            |info| observer(gamma, info),
            |s| s.lcb.iter().all(|&x| x > 0.0) || s.ucb.iter().any(|&x| x < 0.0),
        )?;
        let j_hat = res.g_hat[res.chosen];
        iterations.push(Iterate { gamma, j_hat, chosen: res.chosen, tau: res.tau, stopped_by: res.stopped_by });
        let exhausted = res.stopped_by == StopReason::Budget;
        last = Some(res);
        if j_hat.abs() <= cfg.tol_j {
            lo = gamma;
            hi = gamma;
            break;
        }
        if j_hat > 0.0 {
            lo = gamma;
        } else {
            hi = gamma;
        }
        if hi - lo <= cfg.tol_gamma || exhausted {
            break;
        }
    }
    let last = last.expect("at least one iterate");
    let chosen = last.chosen;
    // Refine inside the final bracket with the root of the chosen arm's
    // affine cost estimate.
    let est = &learner.state.estimators[chosen];
    let root = (est.eta_hat(0.0)? + est.gamma_hat()?) / est.mean_y()?;
    let gamma_hat = if root >= lo && root <= hi { root } else { 0.5 * (lo + hi) };
    Ok(DinkelbachResult { gamma_hat, chosen, bracket: (lo, hi), iterations, last })
}
