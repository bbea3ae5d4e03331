use posg_core::fixtures;
use posg_core::policies::{
    all_histories, constant_policy, enumerate_pure_policies, pure_policy_count, random_policy, PrivateHistory,
    PureTreeSet,
};
use posg_core::{Error, Model};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn pure_tree_counts_follow_the_recursion() {
    // P_1 = |U|, P_d = |U|·P_{d-1}^{|Z|}.
    let recursion = |u: u128, z: u32, h: usize| (1..h).fold(u, |p, _| u * p.pow(z));
    for (u, z, h) in [(3usize, 2usize, 1usize), (3, 2, 2), (2, 2, 3), (3, 1, 4)] {
        assert_eq!(pure_policy_count(u, z, h), recursion(u as u128, z as u32, h));
    }
}

#[test]
fn enumeration_lists_distinct_deterministic_trees() {
    let m: Model = fixtures::tiger();
    let trees = enumerate_pure_policies(&m, 0, 2, 10_000).unwrap();
    assert_eq!(trees.len(), 27);
    assert!(trees.iter().all(|t| t.is_deterministic()));
    for (k, a) in trees.iter().enumerate() {
        assert!(trees[k + 1..].iter().all(|b| a != b));
    }
    let set = PureTreeSet::for_agent(&m, 0, 2);
    assert_eq!(set.count(2), 27);
}

#[test]
fn enumeration_respects_the_cap() {
    let m: Model = fixtures::tiger();
    assert!(matches!(
        enumerate_pure_policies(&m, 0, 2, 26),
        Err(Error::EnumerationTooLarge { cap: 26, .. })
    ));
}

#[test]
fn histories_grow_by_action_observation_pairs() {
    let m: Model = fixtures::tiger();
    assert_eq!(all_histories(&m, 0, 0), vec![PrivateHistory::empty()]);
    let hs = all_histories(&m, 1, 2);
    assert_eq!(hs.len(), 36);
    let h = &hs[7];
    assert_eq!(h.prefix(1).len(), 1);
    assert_eq!(h.strip_prefix(&h.prefix(1)).unwrap().len(), 1);
}

#[test]
fn constant_policy_covers_every_history() {
    let m: Model = fixtures::tiger();
    let p = constant_policy(&m, 1, 2, 2);
    for t in 0..2 {
        for h in all_histories(&m, 1, t) {
            assert_eq!(p.decision_at(&h).unwrap(), &[0.0, 0.0, 1.0]);
        }
    }
    assert!(p.decision_at(&all_histories(&m, 1, 2)[0]).is_err());
}

#[test]
fn policy_json_is_deterministic() {
    let m: Model = fixtures::tiger();
    let p = constant_policy(&m, 0, 1, 0);
    assert_eq!(p.to_json(&m), r#"{"agent":1,"horizon":1,"nodes":[{"history":"-","actions":{"listen":1.0}}]}"#);
}

proptest! {
    #[test]
    fn random_policies_are_distributions(seed in any::<u64>()) {
        let m: Model = fixtures::tiger();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_policy(&m, 0, 2, &mut rng);
        prop_assert_eq!(p.nodes.len(), 1 + 6);
        for d in p.nodes.values() {
            prop_assert!(d.iter().all(|v| *v >= 0.0));
            prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
