mod common;

use aoibai::bounds::*;
use aoibai::instance::{ArmModel, MuBarPolicy, ProblemInstance};
use aoibai::markov::{kernel_power_kl, StochasticMatrix};
use common::*;
use proptest::prelude::*;

/// `Var(X1 + X2)` of the state indicator by enumerating the stationary
/// two-step joint.
pub fn brute_force_var(arm: &ArmModel<f64>) -> f64 {
    let mu = arm.stationary();
    let (mut m1, mut m2) = (0.0, 0.0);
    for s in 0..2 {
        for t in 0..2 {
            let p = mu[s] * arm.chain.get(s, t);
            let x = (s + t) as f64;
            m1 += p * x;
            m2 += p * x * x;
        }
    }
    m2 - m1 * m1
}

fn tilted(p: f64, q: f64, theta: f64) -> ArmModel<f64> {
    ArmModel::new(&two_state(p, q), &bernoulli_emission(), theta).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fisher_matches_two_step_variance(p in 0.01f64..0.99, q in 0.01f64..0.99, theta in -2.0f64..2.0) {
        let arm = tilted(p, q, theta);
        prop_assert!((fisher_info_two_state(&arm).unwrap() - brute_force_var(&arm)).abs() <= 1e-10);
    }

    #[test]
    fn score_ignores_arm_order(
        terms in prop::collection::vec((0.1f64..5.0, 0.05f64..1.0, 1.0f64..50.0), 2..6),
        shift in 0usize..6,
    ) {
        let a: Vec<_> = terms.iter().enumerate().map(|(i, &(g, m, p))| (i + 1, g, m, p)).collect();
        let mut b = a.clone();
        let n = b.len();
        b.rotate_left(shift % n);
        b.reverse();
        let sa = difficulty_score(&a, 0.01, 0.3).unwrap().score;
        let sb = difficulty_score(&b, 0.01, 0.3).unwrap().score;
        prop_assert!((sa - sb).abs() <= 1e-12 * sa);
    }

    #[test]
    fn score_falls_as_any_gap_grows(
        terms in prop::collection::vec((0.1f64..5.0, 0.05f64..1.0, 1.0f64..50.0), 1..6),
        pick in 0usize..6,
        bump in 0.01f64..2.0,
    ) {
        let a: Vec<_> = terms.iter().enumerate().map(|(i, &(g, m, p))| (i + 1, g, m, p)).collect();
        let mut b = a.clone();
        let i = pick % b.len();
        b[i].1 += bump;
        prop_assert!(difficulty_score(&b, 0.05, 0.5).unwrap().score < difficulty_score(&a, 0.05, 0.5).unwrap().score);
    }
}

/// Stationary-weighted `sum_x (d/dtheta p(x))^2 / p(x)` over two-step kernels,
/// with the derivative taken by central differences.
fn two_step_fisher(p: f64, q: f64, theta: f64) -> f64 {
    let h = 1e-5;
    let k = |th: f64| tilted(p, q, th).chain.power(2);
    let (kp, km, k0) = (k(theta + h), k(theta - h), k(theta));
    let mu = tilted(p, q, theta).stationary().to_vec();
    let mut total = 0.0;
    for s in 0..2 {
        for x in 0..2 {
            let d = (kp.get(s, x) - km.get(s, x)) / (2.0 * h);
            total += mu[s] * d * d / k0.get(s, x);
        }
    }
    total
}

fn two_step_kl(p: f64, q: f64, theta: f64, eps: f64) -> f64 {
    let a = tilted(p, q, theta);
    let b = tilted(p, q, theta - eps);
    let mu = a.stationary();
    (0..2).map(|s| mu[s] * kernel_power_kl(&a.chain, &b.chain, 2, s).unwrap()).sum()
}

#[test]
fn kl_matches_quadratic_fisher_term() {
    for &(p, q, theta) in &[(0.3, 0.4, 0.0), (0.2, 0.7, 0.5), (0.5, 0.5, -0.3), (0.1, 0.1, 1.0)] {
        let fisher = two_step_fisher(p, q, theta);
        let r2 = two_step_kl(p, q, theta, 1e-2) / (0.5e-4 * fisher);
        let r3 = two_step_kl(p, q, theta, 1e-3) / (0.5e-6 * fisher);
        assert!((r2 - 1.0).abs() < 0.05, "{p} {q} {theta}: {r2}");
        assert!((r3 - 1.0).abs() < 0.005, "{p} {q} {theta}: {r3}");
        assert!((r3 - 1.0).abs() <= (r2 - 1.0).abs());
    }
}

#[test]
fn cost_grows_with_theta_for_increasing_delays() {
    let inst = five_node();
    let o = inst.oracle().unwrap();
    for i in 0..=20 {
        let theta = -1.0 + 0.1 * i as f64;
        assert!(cost_derivative(&inst, theta, o.gamma_star).unwrap() > 0.0, "theta {theta}");
    }
}

#[test]
fn derivative_matches_independent_difference() {
    let inst = two_arm(0.3, 0.4, [0.0, 0.8]);
    let o = inst.oracle().unwrap();
    let g = |th: f64| {
        let arm = ArmModel::new(&inst.base, &inst.emission, th).unwrap();
        arm.moments(&inst.emission).cost_g(o.gamma_star)
    };
    let h = 1e-4;
    let fd = (g(0.8 + h) - g(0.8 - h)) / (2.0 * h);
    let d = cost_derivative(&inst, 0.8, o.gamma_star).unwrap();
    assert!((d - fd).abs() < 1e-6 * fd.abs());
    let pert = epsilon_from_gap(&inst, &o).unwrap();
    assert_eq!(pert.arm, 1);
    assert!((pert.epsilon - o.gaps[1] / d.abs()).abs() < 1e-9);
}

#[test]
fn epsilon_shrinks_with_parameter_gap() {
    let mut prev = f64::INFINITY;
    for t in [1.0, 0.5, 0.2, 0.05] {
        let inst = two_arm(0.3, 0.4, [0.0, t]);
        let e = epsilon_from_gap(&inst, &inst.oracle().unwrap()).unwrap().epsilon;
        assert!(e < prev);
        prev = e;
    }
    assert!(prev < 0.1);
}

fn bound_for(chain: StochasticMatrix<f64>) -> CaseStudyBound<f64> {
    let inst =
        ProblemInstance::build(chain, bernoulli_emission(), vec![-1.0, 0.0], MuBarPolicy::Oracle).unwrap();
    case_study_lower_bound(&inst, 0.01, Some(0.1)).unwrap()
}

#[test]
fn oscillation_inflates_lower_bound() {
    let fast = bound_for(two_state(0.5, 0.5));
    let osc = bound_for(two_state(0.99, 0.99));
    assert!((fast.mu1 - osc.mu1).abs() < 1e-12);
    assert!((osc.lambda2 + 0.98).abs() < 1e-12);
    assert!(osc.bound > fast.bound);
    assert!((fast.bound - 5526.204).abs() < 1e-2);
    assert!((osc.bound / fast.bound - 50.0).abs() < 1e-9);
}

#[test]
fn squaring_delta_doubles_bound() {
    let inst = two_arm(0.5, 0.5, [-1.0, 0.0]);
    let a = case_study_lower_bound(&inst, 0.1, Some(0.2)).unwrap().bound;
    let b = case_study_lower_bound(&inst, 0.01, Some(0.2)).unwrap().bound;
    assert!((b / a - 2.0).abs() < 1e-12);
}

#[test]
fn wrong_shapes_are_rejected() {
    let inst = five_node();
    assert!(matches!(case_study_lower_bound(&inst, 0.1, None), Err(aoibai::Error::WrongShape { .. })));
    assert!(matches!(epsilon_from_gap(&inst, &inst.oracle().unwrap()), Err(aoibai::Error::WrongShape { .. })));
}

#[test]
fn upper_bound_score_on_preset() {
    let inst = five_node();
    let o = inst.oracle().unwrap();
    let r = upper_bound_score(&o, &inst.arms, inst.mu_bar, 0.01).unwrap();
    assert_eq!(r.terms.len(), 4);
    assert!(r.terms.iter().all(|t| t.term > 0.0));
    let looser = upper_bound_score(&o, &inst.arms, inst.mu_bar, 0.1).unwrap();
    assert!(r.score > looser.score);
    let th = elimination_threshold(&o);
    assert!(th[o.best_arm].is_none());
    for a in 0..5 {
        if a != o.best_arm {
            assert_eq!(th[a], Some(o.gaps[a] / 4.0));
        }
    }
}
