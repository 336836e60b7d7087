//! Sample-complexity calculators: the upper-bound difficulty score, the
//! two-arm two-state lower bound and the per-arm elimination thresholds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{ArmModel, OracleReport, ProblemInstance};
use crate::scalar::Scalar;

/// Central-difference step for `dg/dtheta`.
pub const FD_STEP: f64 = 1e-5;
/// Allowed relative disagreement between the `h` and `h/2` derivatives.
pub const FD_AGREEMENT: f64 = 1e-4;
/// Derivatives smaller than this in magnitude are treated as zero.
pub const FD_VANISH: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmTerm<T> {
    pub arm: usize,
    pub gap: T,
    pub mu_min: T,
    pub psi_max: T,
    /// `(1/mu_min + psi_max) / gap^2`.
    pub term: T,
}

/// Order-level difficulty score. No constant factor is implied: the score
/// ranks instances, it does not predict a pull count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyReport<T> {
    pub terms: Vec<ArmTerm<T>>,
    /// `ln(1 / (delta mu_bar))`.
    pub log_factor: T,
    pub score: T,
}

fn check_delta<T: Scalar>(delta: T) -> Result<()> {
    if delta > T::zero() && delta < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("delta {delta} not in (0,1)")))
    }
}

/// Score from explicit per-arm `(arm, gap, mu_min, psi_max)` tuples of the
/// suboptimal arms.
pub fn difficulty_score<T: Scalar>(
    arms: &[(usize, T, T, T)],
    delta: T,
    mu_bar: T,
) -> Result<DifficultyReport<T>> {
    check_delta(delta)?;
    if !(mu_bar > T::zero() && mu_bar <= T::one()) {
        return Err(Error::InvalidParameter(format!("mu_bar {mu_bar} not in (0,1]")));
    }
    let mut terms = Vec::with_capacity(arms.len());
    for &(arm, gap, mu_min, psi_max) in arms {
        if !(gap > T::zero()) {
            return Err(Error::ZeroGap(arm));
        }
        let term = (mu_min.recip() + psi_max) / (gap * gap);
        terms.push(ArmTerm { arm, gap, mu_min, psi_max, term });
    }
    let log_factor = -(delta * mu_bar).ln();
    let score = terms.iter().map(|t| t.term).sum::<T>() * log_factor;
    Ok(DifficultyReport { terms, log_factor, score })
}

pub fn upper_bound_score<T: Scalar>(
    oracle: &OracleReport<T>,
    arms: &[ArmModel<T>],
    mu_bar: T,
    delta: T,
) -> Result<DifficultyReport<T>> {
    if arms.len() != oracle.gaps.len() {
        return Err(Error::DimensionMismatch { expected: oracle.gaps.len(), got: arms.len() });
    }
    let parts: Vec<_> = (0..arms.len())
        .filter(|&a| a != oracle.best_arm)
        .map(|a| (a, oracle.gaps[a], arms[a].mu_min, arms[a].psi_max))
        .collect();
    difficulty_score(&parts, delta, mu_bar)
}

fn require_two_state<T: Scalar>(arm: &ArmModel<T>) -> Result<()> {
    let n = arm.chain.dim();
    if n != 2 {
        return Err(Error::WrongShape { expected: "2-state".into(), got: format!("{n}-state") });
    }
    Ok(())
}

/// Second eigenvalue of a 2-state chain, `trace - 1`.
pub fn second_eigenvalue_two_state<T: Scalar>(arm: &ArmModel<T>) -> Result<T> {
    require_two_state(arm)?;
    Ok(arm.chain.trace() - T::one())
}

/// `mu(1) (1 - mu(1)) (2 + 2 lambda2)`: variance of `X1 + X2` for the state
/// indicator under the stationary two-step law.
pub fn fisher_info_two_state<T: Scalar>(arm: &ArmModel<T>) -> Result<T> {
    let lambda2 = second_eigenvalue_two_state(arm)?;
    let mu1 = arm.stationary()[1];
    Ok(mu1 * (T::one() - mu1) * (T::lit(2.0) + T::lit(2.0) * lambda2))
}

/// Same quantity for the delay statistic `f(X1) + f(X2)`; reduces to
/// [`fisher_info_two_state`] when `f(s) = s`.
pub fn fisher_info_two_state_scaled<T: Scalar>(arm: &ArmModel<T>, delays: &[T]) -> Result<T> {
    let base = fisher_info_two_state(arm)?;
    let spread = delays[1] - delays[0];
    Ok(spread * spread * base)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Perturbation<T> {
    /// Suboptimal arm being perturbed.
    pub arm: usize,
    pub gap: T,
    /// `dg/dtheta` at the arm's parameter, evaluated at `gamma_star`.
    pub derivative: T,
    pub epsilon: T,
}

pub fn epsilon_from_ratio<T: Scalar>(gap: T, derivative: T) -> Result<T> {
    if derivative.abs() < T::lit(FD_VANISH) {
        return Err(Error::VanishingDerivative(derivative.to_f64_lossy()));
    }
    Ok(gap / derivative.abs())
}

/// `d/dtheta g_theta(gamma)` at `theta` by central differences, checked
/// against the estimate at half the step.
pub fn cost_derivative<T: Scalar>(instance: &ProblemInstance<T>, theta: T, gamma: T) -> Result<T> {
    let g = |th: T| -> Result<T> {
        Ok(ArmModel::new(&instance.base, &instance.emission, th)?.moments(&instance.emission).cost_g(gamma))
    };
    let central = |h: T| -> Result<T> { Ok((g(theta + h)? - g(theta - h)?) / (h + h)) };
    let h = T::lit(FD_STEP);
    let coarse = central(h)?;
    let fine = central(h * T::lit(0.5))?;
    let scale = coarse.abs().max(fine.abs());
    if scale < T::lit(FD_VANISH) {
        return Err(Error::VanishingDerivative(scale.to_f64_lossy()));
    }
    if (coarse - fine).abs() > T::lit(FD_AGREEMENT) * scale {
        return Err(Error::UnstableDerivative { coarse: coarse.to_f64_lossy(), fine: fine.to_f64_lossy() });
    }
    Ok(fine)
}

/// Perturbation of the suboptimal arm of a two-arm instance large enough to
/// flip the best arm to first order.
pub fn epsilon_from_gap<T: Scalar>(
    instance: &ProblemInstance<T>,
    oracle: &OracleReport<T>,
) -> Result<Perturbation<T>> {
    let k = instance.num_arms();
    if k != 2 {
        return Err(Error::WrongShape { expected: "2-arm".into(), got: format!("{k}-arm") });
    }
    let arm = 1 - oracle.best_arm;
    let gap = oracle.gaps[arm];
    let derivative = cost_derivative(instance, instance.thetas[arm], oracle.gamma_star)?;
    let epsilon = epsilon_from_ratio(gap, derivative)?;
    Ok(Perturbation { arm, gap, derivative, epsilon })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyBound<T> {
    pub mu1: T,
    pub lambda2: T,
    pub epsilon: T,
    pub fisher: T,
    pub delta: T,
    pub bound: T,
}

/// `6 ln(1/delta) / (epsilon^2 fisher)`.
pub fn case_study_bound_from_parts<T: Scalar>(epsilon: T, fisher: T, delta: T) -> Result<T> {
    check_delta(delta)?;
    if !(epsilon > T::zero()) || !(fisher > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "epsilon {epsilon} and fisher {fisher} must be positive"
        )));
    }
    Ok(T::lit(6.0) * (-delta.ln()) / (epsilon * epsilon * fisher))
}

/// Lower bound for a two-arm two-state instance. `epsilon` overrides the
/// first-order perturbation size when given.
pub fn case_study_lower_bound<T: Scalar>(
    instance: &ProblemInstance<T>,
    delta: T,
    epsilon: Option<T>,
) -> Result<CaseStudyBound<T>> {
    let k = instance.num_arms();
    let n = instance.num_states();
    if k != 2 || n != 2 {
        return Err(Error::WrongShape {
            expected: "2-arm 2-state".into(),
            got: format!("{k}-arm {n}-state"),
        });
    }
    let oracle = instance.oracle()?;
    let arm = 1 - oracle.best_arm;
    let epsilon = match epsilon {
        Some(e) => e,
        None => epsilon_from_gap(instance, &oracle)?.epsilon,
    };
    let model = &instance.arms[arm];
    let mu1 = model.stationary()[1];
    let lambda2 = second_eigenvalue_two_state(model)?;
    let fisher = fisher_info_two_state_scaled(model, instance.emission.delays())?;
    let bound = case_study_bound_from_parts(epsilon, fisher, delta)?;
    Ok(CaseStudyBound { mu1, lambda2, epsilon, fisher, delta, bound })
}

/// Radius `gap / 4` below which a suboptimal arm should stop being sampled.
/// `None` for the best arm.
pub fn elimination_threshold<T: Scalar>(oracle: &OracleReport<T>) -> Vec<Option<T>> {
    oracle
        .gaps
        .iter()
        .enumerate()
        .map(|(a, &g)| (a != oracle.best_arm).then(|| g * T::lit(0.25)))
        .collect()
}
