use serde::{Deserialize, Serialize};

use super::chain::StochasticMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAX_POWER_ITERATIONS: usize = 1_000_000;

/// Perron root and positive right eigenvector (max entry normalized to 1)
/// of the tilted kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronPair<T> {
    pub rho: T,
    pub v: Vec<T>,
}

/// Exponentially tilts `base` by `theta * f(s')` and renormalizes it into a
/// stochastic matrix through the Perron pair of the tilted kernel:
/// `P_theta(s'|s) = v(s') P(s'|s) e^{theta f(s')} / (rho v(s))`.
pub fn tilt_and_normalize<T: Scalar>(
    base: &StochasticMatrix<T>,
    f: &[T],
    theta: T,
) -> Result<(StochasticMatrix<T>, PerronPair<T>)> {
    let n = base.dim();
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.len() });
    }
    if !base.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    if theta == T::zero() {
        return Ok((base.clone(), PerronPair { rho: T::one(), v: vec![T::one(); n] }));
    }

    // Shift the exponent so every weight is <= 1; rho is rescaled at the end.
    let fmax = f.iter().copied().fold(T::neg_infinity(), T::max);
    let fmin = f.iter().copied().fold(T::infinity(), T::min);
    let reference = if theta > T::zero() { fmax } else { fmin };
    let w: Vec<T> = f.iter().map(|&y| (theta * (y - reference)).exp()).collect();
    let mut tilted = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            tilted[i * n + j] = base.get(i, j) * w[j];
        }
    }

    let (rho_scaled, v) = perron_power_iteration(&tilted, n)?;

    let mut normalized = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            normalized[i * n + j] = v[j] * tilted[i * n + j] / (rho_scaled * v[i]);
        }
    }
    let chain = StochasticMatrix::from_normalized(n, normalized);
    let rho = rho_scaled * (theta * reference).exp();
    Ok((chain, PerronPair { rho, v }))
}

/// Power iteration on `M + alpha I` (the shift removes periodicity without
/// moving the Perron vector), with Rayleigh-quotient updates of the root.
fn perron_power_iteration<T: Scalar>(m: &[T], n: usize) -> Result<(T, Vec<T>)> {
    let row_sums: Vec<T> = (0..n).map(|i| m[i * n..(i + 1) * n].iter().copied().sum()).collect();
    let lo = row_sums.iter().copied().fold(T::infinity(), T::min);
    let hi = row_sums.iter().copied().fold(T::zero(), T::max);
    let alpha = (lo + hi) * T::lit(0.25);
    let tol = T::lit(T::EIGEN_RESIDUAL);

    let mut x = vec![T::one(); n];
    let mut y = vec![T::zero(); n];
    let mut residual = T::infinity();
    for it in 0..MAX_POWER_ITERATIONS {
        for i in 0..n {
            y[i] = (0..n).map(|j| m[i * n + j] * x[j]).sum();
        }
        let num: T = x.iter().zip(&y).map(|(&a, &b)| a * b).sum();
        let den: T = x.iter().map(|&a| a * a).sum();
        let rho = num / den;
        let xmax = x.iter().copied().fold(T::zero(), T::max);
        residual = x
            .iter()
            .zip(&y)
            .map(|(&a, &b)| (b - rho * a).abs())
            .fold(T::zero(), T::max)
            / (rho * xmax);
        if residual <= tol && it > 0 {
            let v: Vec<T> = x.iter().map(|&a| a / xmax).collect();
            if v.iter().any(|&a| a <= T::zero()) {
                break;
            }
            return Ok((rho, v));
        }
        for i in 0..n {
            x[i] = y[i] + alpha * x[i];
        }
        let s = x.iter().copied().fold(T::zero(), T::max);
        x.iter_mut().for_each(|a| *a = *a / s);
    }
    Err(Error::EigenNoConvergence {
        residual: residual.to_f64_lossy(),
        iterations: MAX_POWER_ITERATIONS,
    })
}

/// Level-set regularity flags of the base matrix (never fails).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub irreducible: bool,
    /// Submatrix on the max-delay level set is irreducible.
    pub a1: bool,
    /// Every other state reaches the max-delay level set in one step.
    pub a2: bool,
    /// Submatrix on the min-delay level set is irreducible.
    pub a3: bool,
    /// Every other state reaches the min-delay level set in one step.
    pub a4: bool,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.irreducible && self.a1 && self.a2 && self.a3 && self.a4
    }

    /// Name of the first failing flag.
    pub fn first_violation(&self) -> Option<&'static str> {
        [
            (self.irreducible, "irreducible"),
            (self.a1, "A1"),
            (self.a2, "A2"),
            (self.a3, "A3"),
            (self.a4, "A4"),
        ]
        .into_iter()
        .find(|(ok, _)| !ok)
        .map(|(_, name)| name)
    }
}

pub fn check_assumptions<T: Scalar>(p: &StochasticMatrix<T>, f: &[T]) -> AssumptionReport {
    let n = p.dim();
    let fmax = f.iter().copied().fold(T::neg_infinity(), T::max);
    let fmin = f.iter().copied().fold(T::infinity(), T::min);
    let top: Vec<usize> = (0..n).filter(|&s| f[s] == fmax).collect();
    let bottom: Vec<usize> = (0..n).filter(|&s| f[s] == fmin).collect();
    let reaches = |set: &[usize]| {
        (0..n)
            .filter(|s| !set.contains(s))
            .all(|s| set.iter().any(|&t| p.is_edge(s, t)))
    };
    AssumptionReport {
        irreducible: p.is_irreducible(),
        a1: p.is_irreducible_on(&top),
        a2: reaches(&top),
        a3: p.is_irreducible_on(&bottom),
        a4: reaches(&bottom),
    }
}
