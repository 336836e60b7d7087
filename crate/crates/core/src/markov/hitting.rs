use serde::{Deserialize, Serialize};

use super::chain::StochasticMatrix;
use super::dense;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Expected first-passage times `psi[s][t]` (steps to reach `t` from `s`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingTimes<T> {
    pub psi: Vec<Vec<T>>,
    pub psi_max: T,
}

/// Solves `psi(s,t) = 1 + sum_{u != t} P(u|s) psi(u,t)` for each target `t`.
pub fn hitting_times<T: Scalar>(p: &StochasticMatrix<T>) -> Result<HittingTimes<T>> {
    if !p.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let n = p.dim();
    let mut psi = vec![vec![T::zero(); n]; n];
    let m = n - 1;
    for t in 0..n {
        let others: Vec<usize> = (0..n).filter(|&s| s != t).collect();
        let mut a = vec![T::zero(); m * m];
        for (r, &s) in others.iter().enumerate() {
            for (c, &u) in others.iter().enumerate() {
                let id = if r == c { T::one() } else { T::zero() };
                a[r * m + c] = id - p.get(s, u);
            }
        }
        let x = dense::solve(&a, &vec![T::one(); m], m).ok_or(Error::NotIrreducible)?;
        for (r, &s) in others.iter().enumerate() {
            psi[s][t] = x[r];
        }
    }
    let psi_max = psi.iter().flatten().copied().fold(T::zero(), T::max);
    Ok(HittingTimes { psi, psi_max })
}

/// `KL(P^d(.|s) || Q^d(.|s))` with the convention `0 log 0 = 0`.
pub fn kernel_power_kl<T: Scalar>(
    p: &StochasticMatrix<T>,
    q: &StochasticMatrix<T>,
    d: u32,
    s: usize,
) -> Result<T> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    if s >= p.dim() {
        return Err(Error::InvalidParameter(format!("state {s} out of range")));
    }
    let pd = p.power(d);
    let qd = q.power(d);
    let mut kl = T::zero();
    for (t, (&a, &b)) in pd.row(s).iter().zip(qd.row(s)).enumerate() {
        if a <= T::zero() {
            continue;
        }
        if b <= T::zero() {
            return Err(Error::SupportMismatch { state: t, mass: a.to_f64_lossy() });
        }
        kl = kl + a * (a / b).ln();
    }
    Ok(kl.max(T::zero()))
}
