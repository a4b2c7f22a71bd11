mod common;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use reelpack::policy::index_select;
use reelpack::sim::{compare, simulate};
use reelpack::solver::{
    bellman_error, evaluate_policy_exact, random_augmented_bias, solve_exact, solve_single_reel,
    solve_single_reel_for, verify_decomposition, DEFAULT_MAX_STATES,
};
use reelpack::{
    builtin_case, AugmentedState, ComponentDistribution, ExactOptions, Policy, ProblemInstance,
    RviOptions, SimulationConfig, StateSpace, TabularPolicy,
};

use common::brute_force::{best_gain, tiny_instances};

fn instance(capacity: u32, weights: &[u32], probs: &[f64], reels: usize) -> ProblemInstance {
    let dist = ComponentDistribution::new(weights.to_vec(), probs.to_vec()).unwrap();
    ProblemInstance::new("t", capacity, reels, dist).unwrap()
}

/// Solves `h(w) + g = c(w) + Σ p h(e(w,x))`, `h(0) = 0` directly.
fn linear_single_reel(capacity: u32, weights: &[u32], probs: &[f64]) -> (f64, Vec<f64>) {
    let b = capacity as usize;
    // Unknowns: h(1..B-1), then g.
    let mut a = DMatrix::<f64>::zeros(b, b);
    let mut rhs = DVector::<f64>::zeros(b);
    for w in 0..b {
        if w > 0 {
            a[(w, w - 1)] += 1.0;
        }
        a[(w, b - 1)] += 1.0;
        for (&x, &p) in weights.iter().zip(probs) {
            let x = x as usize;
            let (next, waste) = if w >= x { (w - x, 0) } else { (b - x, w) };
            rhs[w] += p * waste as f64;
            if next > 0 {
                a[(w, next - 1)] -= p;
            }
        }
    }
    let sol = a.lu().solve(&rhs).expect("unichain system is nonsingular");
    let mut h = vec![0.0];
    h.extend(sol.iter().take(b - 1));
    (sol[b - 1], h)
}

#[test]
fn single_reel_bias_matches_linear_solve() {
    for (b, weights, probs) in [
        (10, vec![3, 7], vec![0.5, 0.5]),
        (10, vec![3, 4], vec![0.4, 0.6]),
        (13, vec![2, 5, 6], vec![0.2, 0.5, 0.3]),
    ] {
        let (g, h) = linear_single_reel(b, &weights, &probs);
        let dist = ComponentDistribution::new(weights.clone(), probs.clone()).unwrap();
        let table =
            solve_single_reel(&dist, b, &RviOptions::default().with_tolerance(1e-12)).unwrap();
        assert!(
            (table.gain - g).abs() < 1e-8,
            "B={b}: {} vs {g}",
            table.gain
        );
        for (w, (ours, oracle)) in table.h1.iter().zip(&h).enumerate() {
            assert!(
                (ours - oracle).abs() < 1e-7,
                "B={b} w={w}: {ours} vs {oracle}"
            );
        }
    }
}

#[test]
fn index_scores_match_linear_solve() {
    let (_, h) = linear_single_reel(10, &[3, 7], &[0.5, 0.5]);
    let inst = instance(10, &[3, 7], &[0.5, 0.5], 2);
    let bias = solve_single_reel_for(&inst, &RviOptions::default().with_tolerance(1e-12)).unwrap();
    let state = AugmentedState::new(vec![3, 7], 7, &inst).unwrap();
    let d = index_select(&inst, &state, &bias).unwrap();
    // Reel 3 cannot hold 7: waste 3, refilled to 3. Reel 7 is emptied.
    let expected = [3.0 + h[3] - h[3], h[0] - h[7]];
    for (s, e) in d.scores.unwrap().iter().zip(expected) {
        assert!((s - e).abs() < 1e-7, "{s} vs {e}");
    }
    let best = if expected[0] <= expected[1] { 0 } else { 1 };
    assert_eq!(d.reel, best);
}

#[test]
fn exact_solver_matches_brute_force() {
    for t in tiny_instances() {
        let inst = instance(t.capacity, &t.weights, &t.probs, t.reels);
        let oracle = best_gain(&t);
        let opts = ExactOptions {
            rvi: RviOptions::default().with_tolerance(1e-12),
            ..Default::default()
        };
        let sym = solve_exact(&inst, &opts).unwrap();
        let full = solve_exact(
            &inst,
            &ExactOptions {
                symmetric: false,
                ..opts
            },
        )
        .unwrap();
        assert!(
            (sym.gain - oracle).abs() < 1e-8,
            "B={}: {} vs {oracle}",
            t.capacity,
            sym.gain
        );
        assert!(
            (full.gain - oracle).abs() < 1e-8,
            "B={}: {} vs {oracle}",
            t.capacity,
            full.gain
        );
    }
}

#[test]
fn exact_policy_evaluates_to_its_gain() {
    let inst = instance(10, &[3, 4], &[0.4, 0.6], 2);
    let opts = RviOptions::default().with_tolerance(1e-11);
    let sol = solve_exact(
        &inst,
        &ExactOptions {
            rvi: opts,
            ..Default::default()
        },
    )
    .unwrap();
    let eval = evaluate_policy_exact(
        &inst,
        &Policy::Tabular(sol.policy.clone()),
        &sol.space,
        &opts,
    )
    .unwrap();
    assert!((eval.gain - sol.gain).abs() < 1e-8);
    assert!(sol.residual < 1e-9);
}

#[test]
fn index_improves_on_random_across_small_instances() {
    let opts = RviOptions::default().with_tolerance(1e-11);
    for (b, weights, probs) in [
        (8, vec![2, 3], vec![0.5, 0.5]),
        (9, vec![4, 5], vec![0.7, 0.3]),
        (11, vec![2, 6, 7], vec![0.2, 0.5, 0.3]),
    ] {
        for n in 1..=3 {
            let inst = instance(b, &weights, &probs, n);
            let bias = Arc::new(solve_single_reel_for(&inst, &opts).unwrap());
            let space = StateSpace::enumerate(&inst, false, DEFAULT_MAX_STATES).unwrap();
            let index = Policy::Index(bias.clone());
            let random = evaluate_policy_exact(&inst, &Policy::Random, &space, &opts).unwrap();
            let improved = evaluate_policy_exact(&inst, &index, &space, &opts).unwrap();
            assert!(improved.gain <= random.gain + 1e-9, "B={b} N={n}");
            let h = random_augmented_bias(&space, &bias, 0.0);
            let err = bellman_error(&inst, &space, &index, bias.gain, &h).unwrap();
            assert!(err.max() <= 1e-9, "B={b} N={n}: {}", err.max());
        }
    }
}

#[test]
fn worst_policy_has_positive_bellman_error() {
    let inst = instance(10, &[3, 4], &[0.4, 0.6], 2);
    let sol = solve_exact(&inst, &ExactOptions::default()).unwrap();
    let space = &sol.space;
    let expected: Vec<f64> = (0..space.config_count())
        .map(|c| {
            (0..space.support_len())
                .map(|k| space.probs()[k] * sol.bias[space.aug_index(c, k)])
                .sum()
        })
        .collect();
    let mut actions = Vec::new();
    for c in 0..space.config_count() {
        for k in 0..space.support_len() {
            let worst = (0..space.reels())
                .max_by(|&a, &b| {
                    let q = |a| {
                        let (waste, next) = space.transition(c, k, a);
                        waste as f64 + expected[next]
                    };
                    q(a).total_cmp(&q(b))
                })
                .unwrap();
            actions.push(worst as u8);
        }
    }
    let worst = Policy::Tabular(Arc::new(
        TabularPolicy::new(sol.space.clone(), actions).unwrap(),
    ));
    let err = bellman_error(&inst, space, &worst, sol.gain, &sol.bias).unwrap();
    assert!(err.max() > 1e-3);
    assert!(err.min() > -1e-8);
}

#[test]
fn decomposition_examples() {
    let opts = RviOptions::default().with_tolerance(1e-11);
    let r = verify_decomposition(
        &instance(10, &[3, 4], &[0.4, 0.6], 2),
        &opts,
        DEFAULT_MAX_STATES,
    )
    .unwrap();
    assert!(
        r.naive_residual <= 1e-8 && r.augmented_residual <= 1e-8,
        "{r:?}"
    );
    let r =
        verify_decomposition(&instance(12, &[5], &[1.0], 3), &opts, DEFAULT_MAX_STATES).unwrap();
    assert!((r.single_reel_gain - 1.0).abs() < 1e-9);
    assert!(
        r.naive_residual <= 1e-9 && r.augmented_residual <= 1e-9,
        "{r:?}"
    );
    let one = verify_decomposition(
        &instance(10, &[3, 4], &[0.4, 0.6], 1),
        &opts,
        DEFAULT_MAX_STATES,
    )
    .unwrap();
    assert!((one.naive_residual - one.single_reel_residual).abs() < 1e-9);
}

#[test]
fn simulation_agrees_with_exact_gains() {
    let inst = instance(10, &[3, 4], &[0.4, 0.6], 2);
    let opts = RviOptions::default().with_tolerance(1e-11);
    let space = StateSpace::enumerate(&inst, false, DEFAULT_MAX_STATES).unwrap();
    let bias = Arc::new(solve_single_reel_for(&inst, &opts).unwrap());
    for policy in [Policy::FirstFit, Policy::BestFit, Policy::Index(bias)] {
        let exact = evaluate_policy_exact(&inst, &policy, &space, &opts)
            .unwrap()
            .gain;
        let hits = (0..20)
            .filter(|&seed| {
                let config = SimulationConfig {
                    horizon: 20_000,
                    replications: 10,
                    seed,
                    ..Default::default()
                };
                let r = simulate(&inst, &policy, &config).unwrap();
                (r.mean - exact).abs() <= 3.0 * r.ci95
            })
            .count();
        assert!(
            hits >= 19,
            "{}: {hits}/20 seeds within 3 half-widths",
            policy.name()
        );
    }
}

#[test]
fn paired_difference_sign_follows_exact_ordering() {
    let inst = builtin_case(2, 2).unwrap();
    let opts = RviOptions::default();
    let space = StateSpace::enumerate(&inst, true, DEFAULT_MAX_STATES).unwrap();
    let index = Policy::Index(Arc::new(solve_single_reel_for(&inst, &opts).unwrap()));
    let bf = evaluate_policy_exact(&inst, &Policy::BestFit, &space, &opts)
        .unwrap()
        .gain;
    let ix = evaluate_policy_exact(&inst, &index, &space, &opts)
        .unwrap()
        .gain;
    let config = SimulationConfig {
        horizon: 100_000,
        replications: 10,
        ..Default::default()
    };
    let cmp = compare(&inst, &[Policy::BestFit, index], &config).unwrap();
    let d = &cmp.pairs[0];
    assert_eq!(d.mean_difference > 0.0, bf > ix);
    assert!(d.mean_difference.abs() > d.ci95);
}

#[test]
fn random_and_index_paired_gap_on_case1() {
    let inst = builtin_case(1, 2).unwrap();
    let index = Policy::Index(Arc::new(
        solve_single_reel_for(&inst, &RviOptions::default()).unwrap(),
    ));
    let config = SimulationConfig {
        horizon: 200_000,
        replications: 10,
        ..Default::default()
    };
    let cmp = compare(&inst, &[Policy::Random, index], &config).unwrap();
    let d = &cmp.pairs[0];
    assert!(d.mean_difference - d.ci95 > 0.0, "{d:?}");
}

#[test]
fn warmup_doubling_is_neutral() {
    let inst = builtin_case(3, 2).unwrap();
    let base = SimulationConfig {
        horizon: 1_000_000,
        replications: 8,
        ..Default::default()
    };
    let doubled = SimulationConfig {
        warmup: 2 * base.warmup,
        ..base.clone()
    };
    let a = simulate(&inst, &Policy::BestFit, &base).unwrap();
    let b = simulate(&inst, &Policy::BestFit, &doubled).unwrap();
    assert!((a.mean - b.mean).abs() < a.ci95);
}

#[test]
fn rollout_improves_on_its_base() {
    let inst = builtin_case(2, 3).unwrap();
    let rollout = Policy::Rollout {
        base: Box::new(Policy::BestFit),
        params: reelpack::RolloutParams {
            rollouts: 16,
            horizon: 20,
        },
    };
    let config = SimulationConfig {
        horizon: 20_000,
        replications: 4,
        ..Default::default()
    };
    let cmp = compare(&inst, &[Policy::BestFit, rollout.clone()], &config).unwrap();
    assert!(
        cmp.pairs[0].mean_difference - cmp.pairs[0].ci95 > 0.0,
        "{:?}",
        cmp.pairs[0]
    );
    let again = simulate(
        &inst,
        &rollout,
        &SimulationConfig {
            crn: true,
            ..config
        },
    )
    .unwrap();
    assert_eq!(again.total_waste, cmp.reports[1].total_waste);
}
