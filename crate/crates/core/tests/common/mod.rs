#![allow(dead_code)]

use aoibai::instance::{EmissionMap, MuBarPolicy, ProblemInstance};
use aoibai::markov::StochasticMatrix;
use proptest::prelude::*;

/// Strictly positive row-stochastic matrix of size `n`.
pub fn positive_matrix(n: usize) -> impl Strategy<Value = StochasticMatrix<f64>> {
    prop::collection::vec(0.05f64..1.0, n * n).prop_map(move |w| {
        let mut e = Vec::with_capacity(n * n);
        for r in 0..n {
            let row = &w[r * n..(r + 1) * n];
            let s: f64 = row.iter().sum();
            e.extend(row.iter().map(|x| x / s));
        }
        StochasticMatrix::from_row_major(n, e).unwrap()
    })
}

pub fn sized_positive_matrix() -> impl Strategy<Value = StochasticMatrix<f64>> {
    (2usize..=6).prop_flat_map(positive_matrix)
}

pub fn two_state(p: f64, q: f64) -> StochasticMatrix<f64> {
    StochasticMatrix::from_rows(&[vec![1.0 - p, p], vec![q, 1.0 - q]]).unwrap()
}

pub fn bernoulli_emission() -> EmissionMap<f64> {
    EmissionMap::new(vec![0.0, 1.0]).unwrap()
}

/// Two-state two-arm instance with `f(s) = s`.
pub fn two_arm(p: f64, q: f64, thetas: [f64; 2]) -> ProblemInstance<f64> {
    ProblemInstance::build(two_state(p, q), bernoulli_emission(), thetas.to_vec(), MuBarPolicy::Oracle).unwrap()
}

/// Congestion chain of the five-node preset.
pub fn drain_base() -> StochasticMatrix<f64> {
    let w: Vec<f64> = (0..5).map(|s| (-2.0 * s as f64).exp()).collect();
    let z: f64 = w.iter().sum();
    let rows: Vec<Vec<f64>> = (0..5)
        .map(|s: usize| {
            let mut r: Vec<f64> = w.iter().map(|x| 0.8 * x / z).collect();
            r[s.saturating_sub(1)] += 0.2;
            r
        })
        .collect();
    StochasticMatrix::from_rows(&rows).unwrap()
}

pub fn five_node() -> ProblemInstance<f64> {
    ProblemInstance::build(
        drain_base(),
        EmissionMap::affine(10.0, 5.0, 5).unwrap(),
        vec![0.1, 0.3, 0.5, 0.7, 0.9],
        MuBarPolicy::Oracle,
    )
    .unwrap()
}

/// State sequence of a chain driven by a seeded RNG.
pub fn simulate_states(p: &StochasticMatrix<f64>, start: usize, steps: usize, seed: u64) -> Vec<usize> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut s = start;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(s);
    for _ in 0..steps {
        let u: f64 = rng.random();
        let row = p.row(s);
        let mut acc = 0.0;
        let mut next = row.len() - 1;
        for (t, &x) in row.iter().enumerate() {
            acc += x;
            if u < acc {
                next = t;
                break;
            }
        }
        s = next;
        out.push(s);
    }
    out
}
