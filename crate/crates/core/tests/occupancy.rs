use posg_core::fixtures;
use posg_core::occupancy::{
    decompose, factorize, policy_rule, private_occupancy, recompose, step, OccupancyState, PlanTimeHistory,
    PrivateOccupancyState,
};
use posg_core::policies::{constant_policy, random_joint_policy, JointPolicy};
use posg_core::Model;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Agent 1 listens and agent 2 opens the left door, both for two steps.
fn listen_open_left(m: &Model) -> JointPolicy<f64> {
    JointPolicy::new(vec![constant_policy(m, 0, 2, 0), constant_policy(m, 1, 2, 1)]).unwrap()
}

fn after_listen_open_left(m: &Model) -> OccupancyState<f64> {
    let s0 = OccupancyState::initial(m);
    let rule = policy_rule(m, &listen_open_left(m), &s0).unwrap();
    let branches = step(m, &s0, &rule).unwrap();
    assert_eq!(branches.len(), 1);
    branches.into_iter().next().unwrap().next
}

#[test]
fn listen_open_left_spreads_mass_uniformly() {
    let m: Model = fixtures::tiger();
    let s1 = after_listen_open_left(&m);
    // Opening resets the tiger and makes all four joint observations equally likely.
    let mut expected = String::new();
    for x in ["tiger-left", "tiger-right"] {
        for z1 in ["hear-left", "hear-right"] {
            for z2 in ["hear-left", "hear-right"] {
                expected.push_str(&format!("{x},listen:{z1},open-left:{z2},0.125\n"));
            }
        }
    }
    assert_eq!(s1.len(), 8);
    assert_eq!(s1.to_csv(&m), expected);
}

#[test]
fn decomposition_onto_agent_one_recombines_exactly() {
    let m: Model = fixtures::tiger();
    let s1 = after_listen_open_left(&m);
    let mixture = decompose(&m, m.start(), &listen_open_left(&m), &s1, 0).unwrap();
    assert_eq!(mixture.weights(), vec![0.5, 0.5]);
    for (_, c) in &mixture.components {
        assert_eq!(c.entries.len(), 4);
        assert!(c.entries.values().all(|&p| p == 0.25));
    }
    let back = mixture.recombine().unwrap();
    assert_eq!(back.to_csv(&m), s1.to_csv(&m));
    assert_eq!(back.max_diff(&s1), 0.0);
}

#[test]
fn listening_follows_bayes_rule() {
    let m: Model = fixtures::tiger();
    let s0 = OccupancyState::initial(&m);
    let p = JointPolicy::new(vec![constant_policy(&m, 0, 2, 0), constant_policy(&m, 1, 2, 0)]).unwrap();
    let s1 = step(&m, &s0, &policy_rule(&m, &p, &s0).unwrap()).unwrap().remove(0).next;
    let left = m.state_index("tiger-left").unwrap();
    let hl = m.agent_obs_index(0, "hear-left").unwrap();
    let o = s1.histories(0).into_iter().find(|h| h.steps()[0].1 == hl).unwrap();
    let o2 = s1.histories(1).into_iter().find(|h| h.steps()[0].1 == hl).unwrap();
    let joint = posg_core::policies::JointHistory(vec![o, o2]);
    // Prior 0.5 times the likelihood of both agents hearing correctly.
    assert!((s1.get(left, &joint) - 0.5 * 0.85 * 0.85).abs() < 1e-15);
}

#[test]
fn replaying_a_plan_time_history_matches_direct_updates() {
    let m: Model = fixtures::random_model(3, true);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let policy = random_joint_policy(&m, 3, &mut rng);
    let mut s = OccupancyState::initial(&m);
    let mut rules = Vec::new();
    let mut public = Vec::new();
    for _ in 0..2 {
        let rule = policy_rule(&m, &policy, &s).unwrap();
        let branch = step(&m, &s, &rule).unwrap().pop().unwrap();
        rules.push(rule);
        public.push(branch.public);
        s = branch.next;
    }
    let replay = PlanTimeHistory { start: m.start().to_vec(), rules, public }.occupancy(&m).unwrap();
    assert!(replay.approx_eq(&s, 1e-15));
}

#[test]
fn private_occupancy_is_a_normalized_slice() {
    let m: Model = fixtures::tiger();
    let p = listen_open_left(&m);
    let s1 = after_listen_open_left(&m);
    for h in s1.histories(0) {
        let c = private_occupancy(&m, m.start(), &p.others(0), 0, &h).unwrap();
        let slice = PrivateOccupancyState::slice_of(&s1, 0, &h).unwrap();
        assert!(c.as_occupancy().approx_eq(&slice.as_occupancy(), 1e-15));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn updates_preserve_probability_mass(seed in any::<u64>()) {
        let m: Model = fixtures::random_model(seed % 5, seed % 2 == 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let policy = random_joint_policy(&m, 3, &mut rng);
        let mut s = OccupancyState::initial(&m);
        for _ in 0..3 {
            let branches = step(&m, &s, &policy_rule(&m, &policy, &s).unwrap()).unwrap();
            prop_assert!((branches.iter().map(|b| b.prob).sum::<f64>() - 1.0).abs() < 1e-12);
            for b in &branches {
                prop_assert!((b.next.total() - 1.0).abs() < 1e-12);
            }
            s = branches.into_iter().next().unwrap().next;
        }
    }

    #[test]
    fn factorization_round_trips(seed in any::<u64>(), agent in 0usize..2) {
        let m: Model = fixtures::random_model(seed % 5, true);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let policy = random_joint_policy(&m, 3, &mut rng);
        let s0 = OccupancyState::initial(&m);
        let s1 = step(&m, &s0, &policy_rule(&m, &policy, &s0).unwrap()).unwrap().remove(0).next;
        let (marginal, conditional) = factorize(&s1, agent);
        let back = recompose(s1.t, &marginal, &conditional).unwrap();
        prop_assert!(back.approx_eq(&s1, 1e-14));
    }
}
