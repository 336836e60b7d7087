//! Problem instances: K arms tilted from one base chain, and the exact AoI
//! oracle computed from their stationary laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::markov::{
    check_assumptions, hitting_times, tilt_and_normalize, HittingTimes, PerronPair,
    SpectralReport, StochasticMatrix,
};
use crate::scalar::Scalar;

/// Absolute tolerance on average AoI below which two arms count as tied.
pub const TIE_TOL: f64 = 1e-9;

/// Concentration constant multiplier in `c = 96 (fmax^2 - fmin^2)^2 / beta_min`.
pub const C_MULTIPLIER: f64 = 96.0;

/// Deterministic state-to-delay map (milliseconds).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionMap<T> {
    delays: Vec<T>,
    constant: bool,
}

impl<T: Scalar> EmissionMap<T> {
    pub fn new(delays: Vec<T>) -> Result<Self> {
        Self::validate(&delays)?;
        let m = Self { delays, constant: false };
        if m.max() <= m.min() {
            return Err(Error::InvalidEmission("delays must not all be equal".into()));
        }
        Ok(m)
    }

    /// Same delay `y` in each of `n` states.
    pub fn constant(y: T, n: usize) -> Result<Self> {
        let delays = vec![y; n];
        Self::validate(&delays)?;
        Ok(Self { delays, constant: true })
    }

    /// `f(s) = d_net + s * zeta` for `s = 0..n`.
    pub fn affine(d_net: T, zeta: T, n: usize) -> Result<Self> {
        Self::new((0..n).map(|s| d_net + T::from_usize(s).unwrap() * zeta).collect())
    }

    fn validate(delays: &[T]) -> Result<()> {
        if delays.is_empty() {
            return Err(Error::InvalidEmission("no states".into()));
        }
        if let Some(bad) = delays.iter().find(|d| !(d.is_finite() && **d >= T::zero())) {
            return Err(Error::InvalidEmission(format!("delay {bad} is negative or not finite")));
        }
        Ok(())
    }

    pub fn delays(&self) -> &[T] {
        &self.delays
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn get(&self, s: usize) -> T {
        self.delays[s]
    }

    pub fn max(&self) -> T {
        self.delays.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min(&self) -> T {
        self.delays.iter().copied().fold(T::infinity(), T::min)
    }
}

/// One tilted arm with its cached chain diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmModel<T> {
    pub theta: T,
    pub chain: StochasticMatrix<T>,
    pub perron: PerronPair<T>,
    pub spectral: SpectralReport<T>,
    pub hitting: HittingTimes<T>,
    pub mu_min: T,
    pub psi_max: T,
}

impl<T: Scalar> ArmModel<T> {
    pub fn new(base: &StochasticMatrix<T>, emission: &EmissionMap<T>, theta: T) -> Result<Self> {
        let (chain, perron) = tilt_and_normalize(base, emission.delays(), theta)?;
        let spectral = SpectralReport::compute(&chain)?;
        let hitting = hitting_times(&chain)?;
        let mu_min = spectral.stationary.iter().copied().fold(T::infinity(), T::min);
        let psi_max = hitting.psi_max;
        Ok(Self { theta, chain, perron, spectral, hitting, mu_min, psi_max })
    }

    pub fn stationary(&self) -> &[T] {
        &self.spectral.stationary
    }

    /// Stationary moments of the delay process of this arm.
    pub fn moments(&self, emission: &EmissionMap<T>) -> ArmMoments<T> {
        let mu = self.stationary();
        let f = emission.delays();
        let n = f.len();
        let half = T::lit(0.5);
        let mean_y = (0..n).map(|s| f[s] * mu[s]).sum();
        let half_sq = (0..n).map(|s| half * f[s] * f[s] * mu[s]).sum();
        let pair = (0..n)
            .map(|s| {
                let inner: T = (0..n).map(|t| f[t] * self.chain.get(s, t)).sum();
                f[s] * inner * mu[s]
            })
            .sum();
        ArmMoments { mean_y, half_sq, pair }
    }
}

/// `E[Y]`, `E[Y^2 / 2]` and `E[Y_i Y_{i+1}]` under stationarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmMoments<T> {
    pub mean_y: T,
    pub half_sq: T,
    pub pair: T,
}

impl<T: Scalar> ArmMoments<T> {
    pub fn eta(&self, gamma: T) -> T {
        self.half_sq - gamma * self.mean_y
    }

    pub fn gamma_term(&self) -> T {
        self.pair
    }

    pub fn cost_g(&self, gamma: T) -> T {
        self.eta(gamma) + self.pair
    }

    pub fn average_aoi(&self) -> Result<T> {
        if self.mean_y <= T::zero() {
            return Err(Error::ZeroMeanService);
        }
        Ok(self.cost_g(T::zero()) / self.mean_y)
    }
}

pub fn eta<T: Scalar>(arm: &ArmModel<T>, emission: &EmissionMap<T>, gamma: T) -> T {
    arm.moments(emission).eta(gamma)
}

pub fn gamma_term<T: Scalar>(arm: &ArmModel<T>, emission: &EmissionMap<T>) -> T {
    arm.moments(emission).gamma_term()
}

pub fn cost_g<T: Scalar>(arm: &ArmModel<T>, emission: &EmissionMap<T>, gamma: T) -> T {
    arm.moments(emission).cost_g(gamma)
}

pub fn average_aoi<T: Scalar>(arm: &ArmModel<T>, emission: &EmissionMap<T>) -> Result<T> {
    arm.moments(emission).average_aoi()
}

/// How the stationary floor used in the confidence radius is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MuBarPolicy {
    /// Minimum stationary mass over all arms, from the true chains.
    #[default]
    Oracle,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance<T> {
    pub base: StochasticMatrix<T>,
    pub emission: EmissionMap<T>,
    pub thetas: Vec<T>,
    pub arms: Vec<ArmModel<T>>,
    pub beta_min: T,
    pub mu_bar: T,
}

impl<T: Scalar> ProblemInstance<T> {
    pub fn build(
        base: StochasticMatrix<T>,
        emission: EmissionMap<T>,
        thetas: Vec<T>,
        policy: MuBarPolicy,
    ) -> Result<Self> {
        if emission.len() != base.dim() {
            return Err(Error::DimensionMismatch { expected: base.dim(), got: emission.len() });
        }
        if thetas.len() < 2 {
            return Err(Error::TooFewArms(thetas.len()));
        }
        let report = check_assumptions(&base, emission.delays());
        match report.first_violation() {
            None => {}
            Some("irreducible") => return Err(Error::NotIrreducible),
            Some(flag) => return Err(Error::AssumptionViolated(flag)),
        }
        let arms = thetas
            .iter()
            .map(|&th| ArmModel::new(&base, &emission, th))
            .collect::<Result<Vec<_>>>()?;
        let beta_min = arms.iter().map(|a| a.spectral.pseudo_gap).fold(T::infinity(), T::min);
        let floor = arms.iter().map(|a| a.mu_min).fold(T::infinity(), T::min);
        let mu_bar = match policy {
            MuBarPolicy::Oracle => floor,
            MuBarPolicy::Fixed(x) => {
                let x = T::lit(x);
                if !(x > T::zero() && x < T::one()) || x > floor {
                    return Err(Error::InvalidParameter(format!(
                        "fixed mu_bar {x} must lie in (0, {floor}]"
                    )));
                }
                x
            }
        };
        Ok(Self { base, emission, thetas, arms, beta_min, mu_bar })
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn num_states(&self) -> usize {
        self.base.dim()
    }

    pub fn moments(&self) -> Vec<ArmMoments<T>> {
        self.arms.iter().map(|a| a.moments(&self.emission)).collect()
    }

    /// `c = 96 (fmax^2 - fmin^2)^2 / beta_min`.
    pub fn c_constant(&self) -> T {
        c_constant(self.emission.max(), self.emission.min(), self.beta_min)
    }

    pub fn oracle(&self) -> Result<OracleReport<T>> {
        oracle_from_moments(&self.moments(), self.c_constant())
    }
}

pub fn c_constant<T: Scalar>(fmax: T, fmin: T, beta_min: T) -> T {
    let spread = fmax * fmax - fmin * fmin;
    T::lit(C_MULTIPLIER) * spread * spread / beta_min
}

/// Ground truth for an instance at its optimal Dinkelbach value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport<T> {
    pub gamma_star: T,
    pub best_arm: usize,
    pub average_aoi: Vec<T>,
    pub g_values: Vec<T>,
    pub gaps: Vec<T>,
    pub midpoint_xi: T,
    pub c_constant: T,
}

impl<T: Scalar> OracleReport<T> {
    /// Arm with the second smallest cost at `gamma_star`.
    pub fn runner_up(&self) -> usize {
        (0..self.gaps.len())
            .filter(|&a| a != self.best_arm)
            .min_by(|&a, &b| self.g_values[a].partial_cmp(&self.g_values[b]).unwrap())
            .expect("at least two arms")
    }
}

/// Oracle from per-arm stationary moments; `c` is passed through.
pub fn oracle_from_moments<T: Scalar>(moments: &[ArmMoments<T>], c: T) -> Result<OracleReport<T>> {
    if moments.len() < 2 {
        return Err(Error::TooFewArms(moments.len()));
    }
    let average_aoi = moments.iter().map(|m| m.average_aoi()).collect::<Result<Vec<_>>>()?;
    let mut best_arm = 0;
    for a in 1..average_aoi.len() {
        if average_aoi[a] < average_aoi[best_arm] {
            best_arm = a;
        }
    }
    let gamma_star = average_aoi[best_arm];
    if let Some(tie) = (0..average_aoi.len())
        .find(|&a| a != best_arm && (average_aoi[a] - gamma_star).abs() <= T::lit(TIE_TOL))
    {
        return Err(Error::NonUniqueBestArm(best_arm.min(tie), best_arm.max(tie)));
    }
    let g_values: Vec<T> = moments.iter().map(|m| m.cost_g(gamma_star)).collect();
    let g_best = g_values[best_arm];
    let gaps: Vec<T> = g_values.iter().map(|&g| (g - g_best).max(T::zero())).collect();
    let g_second = (0..g_values.len())
        .filter(|&a| a != best_arm)
        .map(|a| g_values[a])
        .fold(T::infinity(), T::min);
    let midpoint_xi = T::lit(0.5) * (g_best + g_second);
    Ok(OracleReport { gamma_star, best_arm, average_aoi, g_values, gaps, midpoint_xi, c_constant: c })
}
