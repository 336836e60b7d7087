use serde::{Deserialize, Serialize};

use super::dense;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-stochastic transition matrix, indexed `[from][to]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticMatrix<T> {
    n: usize,
    entries: Vec<T>,
}

impl<T: Scalar> StochasticMatrix<T> {
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix("matrix must be square".into()));
        }
        Self::from_row_major(n, rows.iter().flatten().copied().collect())
    }

    pub fn from_row_major(n: usize, entries: Vec<T>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidMatrix(format!("dimension {n} < 2")));
        }
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: entries.len() });
        }
        let tol = T::lit(T::ROW_SUM_TOL);
        for i in 0..n {
            let row = &entries[i * n..(i + 1) * n];
            if let Some(bad) = row.iter().find(|&&p| !(p >= T::zero() && p <= T::one())) {
                return Err(Error::InvalidMatrix(format!("entry {bad} in row {i} outside [0,1]")));
            }
            let sum: T = row.iter().copied().sum();
            if (sum - T::one()).abs() > tol {
                return Err(Error::InvalidMatrix(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { n, entries })
    }

    /// Builds from rows that are already known to be stochastic up to rounding.
    pub(crate) fn from_normalized(n: usize, mut entries: Vec<T>) -> Self {
        for i in 0..n {
            let row = &mut entries[i * n..(i + 1) * n];
            let sum: T = row.iter().copied().sum();
            row.iter_mut().for_each(|p| *p = *p / sum);
        }
        Self { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> T {
        self.entries[from * self.n + to]
    }

    pub fn row(&self, from: usize) -> &[T] {
        &self.entries[from * self.n..(from + 1) * self.n]
    }

    pub fn as_row_major(&self) -> &[T] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `P^d` as a stochastic matrix.
    pub fn power(&self, d: u32) -> Self {
        Self::from_normalized(self.n, dense::mat_pow(&self.entries, self.n, d))
    }

    pub fn max_row_sum_deviation(&self) -> T {
        (0..self.n)
            .map(|i| (self.row(i).iter().copied().sum::<T>() - T::one()).abs())
            .fold(T::zero(), T::max)
    }

    #[inline]
    pub(crate) fn is_edge(&self, from: usize, to: usize) -> bool {
        self.get(from, to) > T::lit(T::POSITIVE_EPS)
    }

    /// Strong connectivity of the positive-entry digraph.
    pub fn is_irreducible(&self) -> bool {
        let all: Vec<usize> = (0..self.n).collect();
        self.is_irreducible_on(&all)
    }

    /// Strong connectivity of the subgraph induced by `states`. A single state
    /// counts as irreducible only when it carries a positive self-loop.
    pub fn is_irreducible_on(&self, states: &[usize]) -> bool {
        match states {
            [] => false,
            [s] => self.is_edge(*s, *s),
            _ => {
                let fwd = self.reach(states, states[0], false);
                let bwd = self.reach(states, states[0], true);
                fwd.iter().all(|&r| r) && bwd.iter().all(|&r| r)
            }
        }
    }

    fn reach(&self, states: &[usize], start: usize, reverse: bool) -> Vec<bool> {
        let mut seen = vec![false; states.len()];
        let pos = |s: usize| states.iter().position(|&x| x == s);
        let mut stack = vec![start];
        seen[pos(start).unwrap()] = true;
        while let Some(u) = stack.pop() {
            for (k, &v) in states.iter().enumerate() {
                let edge = if reverse { self.is_edge(v, u) } else { self.is_edge(u, v) };
                if edge && !seen[k] {
                    seen[k] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}
