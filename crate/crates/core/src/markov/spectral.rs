use serde::{Deserialize, Serialize};

use super::chain::StochasticMatrix;
use super::dense;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Consecutive decreases of `beta'/k` after which the scan over `k` stops.
const EARLY_STOP_RUN: usize = 3;

/// Unique stationary vector of an irreducible chain, by a direct linear solve
/// of `mu (P - I) = 0` with one equation replaced by `sum(mu) = 1`.
pub fn stationary_distribution<T: Scalar>(p: &StochasticMatrix<T>) -> Result<Vec<T>> {
    if !p.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let n = p.dim();
    // Rows of `a` are the equations: (P^T - I) mu = 0, last row all ones.
    let mut a = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = p.get(j, i) - if i == j { T::one() } else { T::zero() };
        }
    }
    for j in 0..n {
        a[(n - 1) * n + j] = T::one();
    }
    let mut b = vec![T::zero(); n];
    b[n - 1] = T::one();
    let mut mu = dense::solve(&a, &b, n).ok_or(Error::NotIrreducible)?;
    mu.iter_mut().for_each(|m| *m = m.max(T::zero()));
    let total: T = mu.iter().copied().sum();
    mu.iter_mut().for_each(|m| *m = *m / total);
    Ok(mu)
}

/// `max |(mu^T P)_j - mu_j|`.
pub fn stationarity_residual<T: Scalar>(p: &StochasticMatrix<T>, mu: &[T]) -> T {
    let n = p.dim();
    (0..n)
        .map(|j| ((0..n).map(|i| mu[i] * p.get(i, j)).sum::<T>() - mu[j]).abs())
        .fold(T::zero(), T::max)
}

/// Default scan length `4 * (S + 1)` for an `n`-state chain.
pub fn default_k_max(n: usize) -> usize {
    4 * n
}

/// Pseudo spectral gap `max_k (1 - lambda_2(P'^k P^k)) / k` together with the
/// smallest maximizing `k`. `P'` is the time reversal of `P` under `mu`.
pub fn pseudo_spectral_gap<T: Scalar>(
    p: &StochasticMatrix<T>,
    mu: &[T],
    k_max: usize,
) -> Result<(T, usize)> {
    let n = p.dim();
    if mu.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: mu.len() });
    }
    let resid = stationarity_residual(p, mu);
    if !(resid <= T::lit(T::STATIONARY_TOL)) {
        return Err(Error::NotStationary(resid.to_f64_lossy()));
    }
    if mu.iter().any(|&m| m <= T::zero()) {
        return Err(Error::NotIrreducible);
    }

    let pm = p.as_row_major();
    let mut rev = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            rev[i * n + j] = mu[j] * pm[j * n + i] / mu[i];
        }
    }
    let sqrt_mu: Vec<T> = mu.iter().map(|m| m.sqrt()).collect();

    let mut pk = dense::identity::<T>(n);
    let mut rk = dense::identity::<T>(n);
    let mut best = (T::neg_infinity(), 1usize);
    let mut prev = T::infinity();
    let mut decreasing = 0usize;
    for k in 1..=k_max.max(1) {
        pk = dense::mat_mul(&pk, pm, n);
        rk = dense::mat_mul(&rk, &rev, n);
        let m = dense::mat_mul(&rk, &pk, n);
        let mut sym = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                sym[i * n + j] = sqrt_mu[i] * m[i * n + j] / sqrt_mu[j];
            }
        }
        // Symmetric in exact arithmetic; average away rounding.
        for i in 0..n {
            for j in i + 1..n {
                let avg = (sym[i * n + j] + sym[j * n + i]) * T::lit(0.5);
                sym[i * n + j] = avg;
                sym[j * n + i] = avg;
            }
        }
        let ev = dense::symmetric_eigenvalues(&sym, n);
        let value = (T::one() - ev[1]) / T::from_usize(k).unwrap();
        if value > best.0 {
            best = (value, k);
        }
        if value < prev {
            decreasing += 1;
            if decreasing >= EARLY_STOP_RUN {
                break;
            }
        } else {
            decreasing = 0;
        }
        prev = value;
    }
    Ok((best.0.min(T::one()), best.1))
}

/// Stationary and mixing diagnostics of one chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport<T> {
    pub stationary: Vec<T>,
    pub pseudo_gap: T,
    /// Exact `trace - 1`, present only for two-state chains.
    pub second_eigenvalue: Option<T>,
    pub k_star: usize,
}

impl<T: Scalar> SpectralReport<T> {
    pub fn compute(p: &StochasticMatrix<T>) -> Result<Self> {
        let stationary = stationary_distribution(p)?;
        let (pseudo_gap, k_star) = pseudo_spectral_gap(p, &stationary, default_k_max(p.dim()))?;
        let second_eigenvalue = (p.dim() == 2).then(|| p.trace() - T::one());
        Ok(Self { stationary, pseudo_gap, second_eigenvalue, k_star })
    }
}
