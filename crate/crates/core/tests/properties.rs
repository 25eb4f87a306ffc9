mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use tsallis_core::mdp::{evaluate_policy_exact, evaluate_policy_from};
use tsallis_core::qmath::max_entropy;
use tsallis_core::qmax::simplex_projection;
use tsallis_core::solvers::standard_value_iteration;
use tsallis_core::*;

const Q_GRID: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 3.0, 5.0];

fn q_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![
        Just(0.5),
        Just(1.0),
        Just(1.5),
        Just(2.0),
        Just(3.0),
        Just(5.0),
        Just(10.0),
        0.2f64..12.0,
    ]
}

fn reward_vec() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, 1..=12)
}

proptest! {
    #[test]
    fn exp_ln_round_trip(x in 1e-6f64..=10.0, qi in 0usize..6) {
        let qi = q(Q_GRID[qi]);
        let back = exp_q(ln_q(x, qi).unwrap(), qi);
        prop_assert!((back - x).abs() <= 1e-10);
    }

    #[test]
    fn ln_q_strictly_increasing(x in 1e-3f64..10.0, dx in 1e-3f64..1.0, qv in q_strategy()) {
        let qi = q(qv);
        prop_assert!(ln_q(x + dx, qi).unwrap() > ln_q(x, qi).unwrap());
    }

    #[test]
    fn exp_q_nondecreasing(x in -20.0f64..20.0, dx in 0.0f64..1.0, qv in q_strategy()) {
        let qi = q(qv);
        let (a, b) = (exp_q(x, qi), exp_q(x + dx, qi));
        prop_assert!(b >= a);
        prop_assert!(a >= 0.0);
        if a > 0.0 && dx > 1e-9 && b.is_finite() {
            prop_assert!(b > a);
        }
    }

    #[test]
    fn qmax_shift_invariance(f in reward_vec(), c in -5.0f64..5.0, qv in q_strategy()) {
        let qi = q(qv);
        let base = q_max(&f, qi).unwrap();
        let g: Vec<f64> = f.iter().map(|x| x + c).collect();
        let shifted = q_max(&g, qi).unwrap();
        prop_assert!((shifted.value - base.value - c).abs() <= 1e-8);
        for (a, b) in shifted.policy.probs().iter().zip(base.policy.probs()) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn qmax_monotone(f in reward_vec(), bumps in prop::collection::vec(0.0f64..2.0, 12), qv in q_strategy()) {
        let qi = q(qv);
        let g: Vec<f64> = f.iter().zip(&bumps).map(|(x, b)| x + b).collect();
        prop_assert!(q_max(&f, qi).unwrap().value <= q_max(&g, qi).unwrap().value + 1e-10);
    }

    #[test]
    fn qmax_normalization_and_support(f in reward_vec(), qv in q_strategy()) {
        let qi = q(qv);
        let r = q_max(&f, qi).unwrap();
        let total: f64 = r.policy.probs().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        prop_assert_eq!(r.support.clone(), r.policy.support());
        prop_assert!((r.value - objective(r.policy.probs(), &f, qi.value())).abs() <= 1e-10);
        prop_assert!(r.discrepancy() <= 1e-8);
        if qv <= 2.0 {
            let s: f64 = f.iter().map(|x| exp_q(x / qi.value() - r.psi, qi)).sum();
            prop_assert!((s - 1.0).abs() <= 1e-9, "sum {}", s);
        }
    }

    #[test]
    fn q2_is_simplex_projection(f in reward_vec()) {
        let r = q_max(&f, q(2.0)).unwrap();
        let z: Vec<f64> = f.iter().map(|x| x / 2.0).collect();
        let (proj, _) = simplex_projection(&z);
        for (a, b) in r.policy.probs().iter().zip(&proj) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }

    #[test]
    fn q1_is_log_sum_exp(f in reward_vec()) {
        let r = q_max(&f, q(1.0)).unwrap();
        let m = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + f.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
        prop_assert!((r.value - lse).abs() <= 1e-9);
    }
}

#[test]
fn entropy_maximized_by_uniform() {
    let mut rng = rng(11);
    for _ in 0..10_000 {
        let n = rng.random_range(1..=8);
        let qv = Q_GRID[rng.random_range(0..Q_GRID.len())];
        let p = DiscreteDistribution::new(random_distribution(&mut rng, n)).unwrap();
        let cap = -ln_q(1.0 / n as f64, q(qv)).unwrap();
        assert!(tsallis_entropy(&p, q(qv)) <= cap + 1e-12);
        assert!(tsallis_entropy(&p, q(qv)) >= 0.0);
    }
}

#[test]
fn entropy_concave() {
    let mut rng = rng(12);
    for _ in 0..10_000 {
        let n = rng.random_range(2..=8);
        let qv = Q_GRID[rng.random_range(0..Q_GRID.len())];
        let a = random_distribution(&mut rng, n);
        let b = random_distribution(&mut rng, n);
        let lambda: f64 = rng.random_range(0.01..0.99);
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
        let s = |p: &[f64]| tsallis_entropy(&DiscreteDistribution::new(p.to_vec()).unwrap(), q(qv));
        assert!(s(&mix) >= lambda * s(&a) + (1.0 - lambda) * s(&b) - 1e-12);
    }
}

#[test]
fn greedy_limit_large_q() {
    let mut rng = rng(13);
    let qi = q(100.0);
    for _ in 0..2_000 {
        let n = rng.random_range(1..=8);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let r = q_max(&f, qi).unwrap();
        let m = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!((r.value - m).abs() <= max_entropy(n, qi) + 1e-12);
    }
    // Exactly greedy once every gap exceeds q/(q-1).
    for _ in 0..2_000 {
        let n = rng.random_range(2..=8);
        let best = rng.random_range(0..n);
        let f: Vec<f64> = (0..n)
            .map(|i| if i == best { 3.0 } else { rng.random_range(-5.0..3.0 - 100.0 / 99.0) })
            .collect();
        let r = q_max(&f, qi).unwrap();
        assert!(r.policy.probs()[best] >= 1.0 - 1e-3);
    }
    // Tied maxima share the mass.
    let r = q_max(&[2.0, -4.0, 2.0, 2.0], qi).unwrap();
    for &a in &[0, 2, 3] {
        assert!((r.policy.probs()[a] - 1.0 / 3.0).abs() < 1e-9);
    }
}

#[test]
fn tbe_unique_fixed_point() {
    let mut rng = rng(21);
    for _ in 0..50 {
        let mdp = random_mdp(&mut rng, 5, 4, 0.9);
        let pi = random_policy(&mut rng, mdp.n_states(), mdp.n_actions());
        let qi = q(Q_GRID[rng.random_range(0..Q_GRID.len())]);
        let zero = QFunction::zeros(mdp.n_states(), mdp.n_actions());
        let ten = QFunction::constant(mdp.n_states(), mdp.n_actions(), 10.0);
        let a = evaluate_policy_from(&mdp, &pi, qi, 1.0, &zero, 1e-12, 100_000).unwrap();
        let b = evaluate_policy_from(&mdp, &pi, qi, 1.0, &ten, 1e-12, 100_000).unwrap();
        assert!(a.q.sup_distance(&b.q) <= 1e-8);
    }
}

#[test]
fn objective_decomposes_into_return_and_entropy() {
    let mut rng = rng(22);
    for _ in 0..100 {
        let gamma = rng.random_range(0.5..0.95);
        let mdp = random_mdp(&mut rng, 5, 4, gamma);
        let pi = random_policy(&mut rng, mdp.n_states(), mdp.n_actions());
        let qi = q(rng.random_range(0.3..6.0));
        let alpha = rng.random_range(0.1..2.0);
        let (v, _) = evaluate_policy(&mdp, &pi, qi, alpha).unwrap();
        let j = discounted_return(&mdp, &pi).unwrap();
        let s = discounted_tsallis_entropy(&mdp, &pi, qi).unwrap();
        assert!((j + alpha * s - v.expected_under(mdp.initial())).abs() <= 1e-7);
    }
}

#[test]
fn visitation_policy_round_trip() {
    let mut rng = rng(23);
    for _ in 0..100 {
        let mdp = random_mdp(&mut rng, 6, 4, 0.9);
        let pi = random_policy(&mut rng, mdp.n_states(), mdp.n_actions());
        let rho = compute_visitation(&mdp, &pi).unwrap();
        assert!(rho.flow_violation(&mdp) <= 1e-8);
        let back = policy_from_visitation(&rho);
        for s in 0..mdp.n_states() {
            if rho.state_mass(s) > 0.0 {
                for a in 0..mdp.n_actions() {
                    assert!((back.prob(s, a) - pi.prob(s, a)).abs() <= 1e-8);
                }
            }
        }
    }
}

#[test]
fn operators_contract_and_shift() {
    let mut rng = rng(24);
    for _ in 0..200 {
        let gamma = rng.random_range(0.3..0.99);
        let mdp = random_mdp(&mut rng, 5, 4, gamma);
        let (ns, na) = (mdp.n_states(), mdp.n_actions());
        let qi = q(Q_GRID[rng.random_range(0..Q_GRID.len())]);
        let alpha = rng.random_range(0.2..2.0);
        let table = |rng: &mut rand_chacha::ChaCha8Rng| {
            QFunction::from_vec(ns, na, (0..ns * na).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap()
        };
        let (f, g) = (table(&mut rng), table(&mut rng));
        let pi = random_policy(&mut rng, ns, na);
        let tf = tbo_operator(&mdp, &f, qi, alpha).unwrap();
        let tg = tbo_operator(&mdp, &g, qi, alpha).unwrap();
        assert!(tf.sup_distance(&tg) <= gamma * f.sup_distance(&g) + 1e-12);
        let ef = tbe_operator(&mdp, &f, &pi, qi, alpha).unwrap();
        let eg = tbe_operator(&mdp, &g, &pi, qi, alpha).unwrap();
        assert!(ef.sup_distance(&eg) <= gamma * f.sup_distance(&g) + 1e-12);

        // Monotonicity of the optimality operator.
        let lifted = QFunction::from_vec(
            ns,
            na,
            f.values().iter().map(|x| x + rng.random_range(0.0..1.0)).collect(),
        )
        .unwrap();
        let tl = tbo_operator(&mdp, &lifted, qi, alpha).unwrap();
        assert!(tf.values().iter().zip(tl.values()).all(|(a, b)| *a <= b + 1e-12));

        // Exact shift by 5.
        let shifted = tbe_operator(&mdp, &f.shifted(5.0), &pi, qi, alpha).unwrap();
        assert!(shifted.sup_distance(&ef.shifted(5.0 * gamma)) <= 1e-12);
    }
}

#[test]
fn tvi_dominates_standard_vi() {
    let mut rng = rng(25);
    let cfg = SolverConfig::default();
    for _ in 0..30 {
        let mdp = random_mdp(&mut rng, 5, 4, 0.9);
        let qv = Q_GRID[rng.random_range(0..Q_GRID.len())];
        let soft = tsallis_value_iteration(&mdp, q(qv), 1.0, &cfg).unwrap();
        let hard = standard_value_iteration(&mdp, &cfg).unwrap();
        for (a, b) in soft.v_function.values().iter().zip(hard.v_function.values()) {
            assert!(*a >= b - 1e-9);
        }
    }
}

#[test]
fn tvi_q100_close_to_standard() {
    let mut rng = rng(26);
    let cfg = SolverConfig::default();
    for _ in 0..20 {
        let mdp = random_mdp(&mut rng, 5, 4, 0.9);
        let soft = tsallis_value_iteration(&mdp, q(100.0), 1.0, &cfg).unwrap();
        let hard = standard_value_iteration(&mdp, &cfg).unwrap();
        let bound = max_entropy(mdp.n_actions(), q(100.0)) / (1.0 - mdp.discount());
        assert!(soft.v_function.sup_distance(&hard.v_function) <= bound + 1e-9);
    }
}

#[test]
fn tvi_residuals_contract() {
    let mut rng = rng(27);
    let cfg = SolverConfig::default();
    for qv in [0.5, 1.0, 2.0, 3.0] {
        let mdp = random_mdp(&mut rng, 5, 3, 0.8);
        let report = tsallis_value_iteration(&mdp, q(qv), 1.0, &cfg).unwrap();
        for w in report.residuals.windows(2).skip(2) {
            if w[0] > 1e-9 {
                assert!(w[1] <= (mdp.discount() + 1e-6) * w[0] + 1e-12, "{w:?}");
            }
        }
        assert!(*report.residuals.last().unwrap() < cfg.tolerance);
    }
}

#[test]
fn tvi_reduces_to_soft_vi_at_one() {
    let mut rng = rng(28);
    let cfg = SolverConfig::default();
    for _ in 0..20 {
        let mdp = random_mdp(&mut rng, 6, 4, 0.9);
        let alpha = rng.random_range(0.2..2.0);
        let report = tsallis_value_iteration(&mdp, q(1.0), alpha, &cfg).unwrap();
        let oracle = soft_value_iteration(&mdp, alpha, 1e-13);
        let diff = report
            .v_function
            .values()
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-8, "{diff}");
    }
}

#[test]
fn tvi_policy_is_sparsemax_at_two() {
    let mut rng = rng(29);
    let cfg = SolverConfig::default();
    for _ in 0..20 {
        let mdp = random_mdp(&mut rng, 5, 4, 0.9);
        let alpha = rng.random_range(0.2..2.0);
        let report = tsallis_value_iteration(&mdp, q(2.0), alpha, &cfg).unwrap();
        for s in 0..mdp.n_states() {
            let z: Vec<f64> = report.q_function.row(s).iter().map(|x| x / (2.0 * alpha)).collect();
            let (proj, _) = simplex_projection(&z);
            for (a, b) in report.policy.row(s).probs().iter().zip(&proj) {
                assert!((a - b).abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn tpi_improves_monotonically() {
    let mut rng = rng(30);
    let cfg = SolverConfig::default();
    for _ in 0..30 {
        let mdp = random_mdp(&mut rng, 6, 4, 0.9);
        let qv = Q_GRID[rng.random_range(0..Q_GRID.len())];
        let report = tsallis_policy_iteration(&mdp, q(qv), 1.0, &cfg).unwrap();
        for w in report.objective_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "{w:?}");
        }
    }
}

#[test]
fn improvement_dominates_pointwise() {
    let mut rng = rng(31);
    for _ in 0..50 {
        let mdp = random_mdp(&mut rng, 5, 4, 0.9);
        let qi = q(Q_GRID[rng.random_range(0..Q_GRID.len())]);
        let pi = random_policy(&mut rng, mdp.n_states(), mdp.n_actions());
        let (_, q_old) = evaluate_policy_exact(&mdp, &pi, qi, 1.0).unwrap();
        let improved = policy_improvement(&mdp, &q_old, qi, 1.0).unwrap();
        let (_, q_new) = evaluate_policy_exact(&mdp, &improved, qi, 1.0).unwrap();
        for (a, b) in q_new.values().iter().zip(q_old.values()) {
            assert!(*a >= b - 1e-8);
        }
    }
}

#[test]
fn ln_q_approaches_ln_near_one() {
    for &x in &[0.01, 0.3, 1.0, 2.5, 10.0] {
        for &d in &[1e-4, -1e-4, 1e-6] {
            let v = ln_q(x, q(1.0 + d)).unwrap();
            assert!((v - f64::ln(x)).abs() <= 1e-3 * (1.0 + f64::ln(x).powi(2)));
        }
    }
}

#[test]
fn evaluation_matches_linear_solve() {
    let mut rng = rng(32);
    let mdp = TabularMdp::random(&mut rng, 4, 3, 0.9).unwrap();
    let pi = random_policy(&mut rng, 4, 3);
    let qv = 2.0;
    let alpha = 0.7;
    // V = r_pi + alpha S(pi) + gamma P_pi V
    let mut a = vec![vec![0.0; 4]; 4];
    let mut b = vec![0.0; 4];
    for s in 0..4 {
        a[s][s] += 1.0;
        b[s] = alpha * entropy(pi.row(s).probs(), qv);
        for act in 0..3 {
            let p = pi.prob(s, act);
            b[s] += p * mdp.expected_reward(s, act);
            for (t, pt) in mdp.next_state_probs(s, act).iter().enumerate() {
                a[s][t] -= mdp.discount() * p * pt;
            }
        }
    }
    let oracle = gauss_solve(a, b);
    let (v, f) = evaluate_policy(&mdp, &pi, q(qv), alpha).unwrap();
    for s in 0..4 {
        assert!((v.values()[s] - oracle[s]).abs() <= 1e-8);
        for act in 0..3 {
            let backup: f64 = mdp.expected_reward(s, act)
                + mdp.discount() * mdp.next_state_probs(s, act).iter().zip(&oracle).map(|(p, x)| p * x).sum::<f64>();
            assert!((f.get(s, act) - backup).abs() <= 1e-8);
        }
    }
}
