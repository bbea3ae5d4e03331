use posg_core::evaluate::evaluate_occupancy;
use posg_core::fixtures;
use posg_core::occupancy::OccupancyState;
use posg_core::policies::{enumerate_pure_policies, random_policy, OthersPolicy};
use posg_core::solve::{
    best_response_history, best_response_private, matrix_game_value, solve_dec, solve_dec_at, solve_stackelberg,
    solve_zero_sum, solve_zero_sum_at, Caps, ContinuationGame, MatrixGame,
};
use posg_core::{Criterion, Error, Joint, Model};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CAPS: Caps = Caps { per_agent: 10_000, joint: 1_000_000 };

/// Agent 1's one-stage payoff in the listen/open game at belief `b` in the treasure state.
fn one_stage(b: f64) -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.0, 2.0 * b - 2.0 * (1.0 - b)]]
}

/// Value of a 2×2 zero-sum game by checking for a pure saddle, then the mixed closed form.
fn two_by_two_value(a: [[f64; 2]; 2]) -> f64 {
    let maxmin = (0..2).map(|r| a[r][0].min(a[r][1])).fold(f64::NEG_INFINITY, f64::max);
    let minmax = (0..2).map(|c| a[0][c].max(a[1][c])).fold(f64::INFINITY, f64::min);
    if (maxmin - minmax).abs() < 1e-15 {
        maxmin
    } else {
        (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / (a[0][0] + a[1][1] - a[0][1] - a[1][0])
    }
}

fn one_stage_tiger_at(b: f64, criterion: Option<Criterion>) -> (Model, OccupancyState<f64>) {
    let mut m: Model = fixtures::one_stage_tiger();
    if let Some(c) = criterion {
        m = m.with_criterion(c).unwrap();
    }
    let s = OccupancyState::from_belief(&m, &[b, 1.0 - b]);
    (m, s)
}

#[test]
fn common_payoff_one_stage_picks_the_best_joint_action() {
    for (b, value, action) in [(0.5, 1.0, 0), (1.0, 2.0, 1), (0.9, 1.6, 1)] {
        let (m, s) = one_stage_tiger_at(b, None);
        let oracle = one_stage(b).iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        let eq = solve_dec_at(&m, &s, CAPS).unwrap();
        assert!((eq.value() - oracle).abs() < 1e-12);
        assert!((eq.value() - value).abs() < 1e-12);
        for i in 0..2 {
            let tree = &eq.mixtures[i][0].policy;
            assert_eq!(tree.nodes.values().next().unwrap()[action], 1.0);
        }
    }
}

#[test]
fn zero_sum_one_stage_matches_the_closed_form() {
    for (b, expected) in [(0.5, 0.0), (1.0, 2.0 / 3.0), (0.75, 0.5), (0.2, 0.0)] {
        let (m, s) = one_stage_tiger_at(b, Some(Criterion::ZeroSum));
        let eq = solve_zero_sum_at(&m, &s, CAPS, 1e-9).unwrap();
        let oracle = two_by_two_value(one_stage(b));
        assert!((oracle - expected).abs() < 1e-12);
        assert!((eq.value() - oracle).abs() < 1e-9, "b={b}: {} vs {oracle}", eq.value());
        assert!((eq.values[1] + eq.values[0]).abs() < 1e-12);
    }
}

#[test]
fn dec_value_dominates_every_pure_joint_policy() {
    let m: Model = fixtures::tiger();
    let eq = solve_dec(&m, 2, CAPS).unwrap();
    let s0 = OccupancyState::initial(&m);
    let trees = enumerate_pure_policies(&m, 0, 2, CAPS.per_agent).unwrap();
    let mut best = f64::NEG_INFINITY;
    for a in &trees {
        for b in &enumerate_pure_policies(&m, 1, 2, CAPS.per_agent).unwrap() {
            let v = evaluate_occupancy(&m, &Joint::new(vec![a.clone(), b.clone()]).unwrap(), &s0, 0).unwrap();
            assert!(v <= eq.value() + 1e-9);
            best = best.max(v);
        }
    }
    assert!((best - eq.value()).abs() < 1e-9);
    assert!((eq.value() + 4.0).abs() < 1e-9);
}

#[test]
fn zero_sum_tiger_value_satisfies_the_saddle_certificate() {
    let m: Model = fixtures::tiger_zs();
    let s0 = OccupancyState::initial(&m);
    let game = ContinuationGame::new(&m, &s0, CAPS).unwrap();
    let (a, _) = game.bimatrix().unwrap();
    let eq = solve_zero_sum(&m, 2, CAPS, 1e-9).unwrap();
    let mut row = vec![0.0; a.rows];
    for e in &eq.mixtures[0] {
        row[e.index] = e.weight;
    }
    let mut col = vec![0.0; a.cols];
    for e in &eq.mixtures[1] {
        col[e.index] = e.weight;
    }
    let v = eq.value();
    assert!(a.row_payoffs(&row).iter().all(|&p| p >= v - 1e-6));
    assert!(a.col_payoffs(&col).iter().all(|&p| p <= v + 1e-6));
}

#[test]
fn commitment_never_hurts_the_leader() {
    let m: Model = fixtures::stackelberg_2x2();
    let sse = solve_stackelberg(&m, m.horizon(), CAPS, 1e-9).unwrap();
    let maxmin = solve_zero_sum(&m.with_criterion(Criterion::ZeroSum).unwrap(), m.horizon(), CAPS, 1e-9).unwrap();
    assert!(sse.value() >= maxmin.value() - 1e-9);

    let s0 = OccupancyState::initial(&m);
    let game = ContinuationGame::new(&m, &s0, CAPS).unwrap();
    let (leader, follower) = game.bimatrix().unwrap();
    let mut mix = vec![0.0; leader.rows];
    for e in &sse.mixtures[0] {
        mix[e.index] = e.weight;
    }
    let k = sse.mixtures[1][0].index;
    let follower_payoffs = follower.row_payoffs(&mix);
    assert!(follower_payoffs.iter().all(|&p| p <= follower_payoffs[k] + 1e-9));
    assert!((leader.row_payoffs(&mix)[k] - sse.value()).abs() < 1e-9);
    // Committing to a pure policy with the follower breaking ties for the leader is a lower bound.
    for r in 0..leader.rows {
        let best = (0..follower.cols).map(|c| follower.at(r, c)).fold(f64::NEG_INFINITY, f64::max);
        let pure = (0..follower.cols)
            .filter(|&c| follower.at(r, c) >= best - 1e-12)
            .map(|c| leader.at(r, c))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(sse.value() >= pure - 1e-9);
    }
}

#[test]
fn stackelberg_on_shared_payoffs_matches_the_cooperative_optimum() {
    let (m, _) = one_stage_tiger_at(0.5, None);
    let sse = solve_stackelberg(&m.with_criterion(Criterion::Stackelberg).unwrap(), 1, CAPS, 1e-9).unwrap();
    let dec = solve_dec(&m, 1, CAPS).unwrap();
    assert!((sse.value() - 1.0).abs() < 1e-9);
    assert!((dec.value() - sse.value()).abs() < 1e-9);
}

#[test]
fn best_responses_agree_across_both_recursions() {
    let m: Model = fixtures::tiger();
    for h in [1, 2] {
        let m = m.with_horizon(h).unwrap();
        for seed in 0..4 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let others = OthersPolicy::new(0, vec![None, Some(random_policy(&m, 1, h, &mut rng))]);
            let a = best_response_history(&m, &others, 0).unwrap();
            let b = best_response_private(&m, &others, 0).unwrap();
            assert!((a.value - b.value).abs() < 1e-9);
            let achieved = evaluate_occupancy(&m, &others.with(a.policy.clone()), &OccupancyState::initial(&m), 0).unwrap();
            assert!((achieved - a.value).abs() < 1e-9);
        }
    }
}

#[test]
fn single_agent_best_response_is_the_planning_value() {
    let m: Model = fixtures::minimal();
    let others = OthersPolicy::new(0, vec![None]);
    assert_eq!(best_response_private(&m, &others, 0).unwrap().value, 0.0);
}

#[test]
fn caps_are_enforced() {
    let m: Model = fixtures::tiger();
    let tight = Caps { per_agent: 10, joint: 1_000_000 };
    assert!(matches!(solve_dec(&m, 2, tight), Err(Error::EnumerationTooLarge { .. })));
}

#[test]
fn general_sum_models_are_rejected_by_the_dec_solver() {
    let m: Model = fixtures::stackelberg_2x2();
    assert!(matches!(solve_dec(&m, 1, CAPS), Err(Error::CriterionMismatch { .. })));
}

#[test]
fn matrix_game_examples() {
    let g = MatrixGame::from_rows(&[vec![1.0f64, 0.0], vec![0.0, 0.0]]).unwrap();
    assert!(matrix_game_value(&g, 1e-9).unwrap().value.abs() < 1e-9);
    let g = MatrixGame::from_rows(&[vec![1.0f64, 0.0], vec![0.0, 2.0]]).unwrap();
    let s = matrix_game_value(&g, 1e-9).unwrap();
    assert!((s.value - 2.0 / 3.0).abs() < 1e-9);
    assert!((s.row_mix[0] - 2.0 / 3.0).abs() < 1e-9 && (s.row_mix[1] - 1.0 / 3.0).abs() < 1e-9);
    let g = MatrixGame::from_rows(&[vec![7.25f64]]).unwrap();
    assert_eq!(matrix_game_value(&g, 1e-9).unwrap().value, 7.25);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_game_mixtures_certify_the_value(
        rows in 1usize..7,
        cols in 1usize..7,
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let payoff: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-10.0..10.0)).collect();
        let g = MatrixGame::new(rows, cols, payoff).unwrap();
        let s = matrix_game_value(&g, 1e-9).unwrap();
        prop_assert!(g.row_payoffs(&s.row_mix).iter().all(|&p| p >= s.value - 1e-7));
        prop_assert!(g.col_payoffs(&s.col_mix).iter().all(|&p| p <= s.value + 1e-7));
        prop_assert!((s.row_mix.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
