use posg_core::evaluate::{evaluate_history, evaluate_occupancy, evaluate_q, linear_eval, simulate};
use posg_core::fixtures;
use posg_core::occupancy::OccupancyState;
use posg_core::policies::{constant_policy, random_joint_policy, JointPolicy, PrivateHistory};
use posg_core::Model;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Expected discounted return by explicit recursion over states, actions and observations.
fn brute_force(m: &Model, p: &JointPolicy<f64>, agent: usize) -> f64 {
    fn go(m: &Model, p: &JointPolicy<f64>, agent: usize, x: usize, hs: &[PrivateHistory], t: usize) -> f64 {
        if t == m.horizon() {
            return 0.0;
        }
        let n = m.n_agents();
        let dists: Vec<&[f64]> = (0..n).map(|i| p.trees[i].decision_at(&hs[i]).unwrap()).collect();
        let mut total = 0.0;
        for u in 0..m.n_joint_actions() {
            let acts = m.actions_of(u);
            let pu: f64 = (0..n).map(|i| dists[i][acts[i]]).product();
            if pu == 0.0 {
                continue;
            }
            let mut future = 0.0;
            for x2 in 0..m.n_states() {
                for z in 0..m.n_joint_obs() {
                    let q = m.transition(u, x, x2) * m.observation(u, x2, z);
                    if q == 0.0 {
                        continue;
                    }
                    let next: Vec<PrivateHistory> =
                        (0..n).map(|i| hs[i].extended(acts[i], m.agent_obs(z, i))).collect();
                    future += q * go(m, p, agent, x2, &next, t + 1);
                }
            }
            total += pu * (m.reward(agent, x, u) + m.discount() * future);
        }
        total
    }
    let empty = vec![PrivateHistory::empty(); m.n_agents()];
    (0..m.n_states()).map(|x| m.start()[x] * go(m, p, agent, x, &empty, 0)).sum()
}

fn pure_pair(m: &Model, a: usize, b: usize) -> JointPolicy<f64> {
    let h = m.horizon();
    JointPolicy::new(vec![constant_policy(m, 0, h, a), constant_policy(m, 1, h, b)]).unwrap()
}

#[test]
fn one_stage_tiger_payoffs_along_the_belief() {
    let m: Model = fixtures::one_stage_tiger();
    for k in 0..=10 {
        let b = k as f64 / 10.0;
        let s = OccupancyState::from_belief(&m, &[b, 1.0 - b]);
        let listen = evaluate_occupancy(&m, &pure_pair(&m, 0, 0), &s, 0).unwrap();
        let open = evaluate_occupancy(&m, &pure_pair(&m, 1, 1), &s, 0).unwrap();
        assert!((listen - 1.0).abs() < 1e-12);
        assert!((open - (2.0 * b - 2.0 * (1.0 - b))).abs() < 1e-12);
        assert_eq!(evaluate_occupancy(&m, &pure_pair(&m, 0, 1), &s, 0).unwrap(), 0.0);
    }
}

#[test]
fn bellman_tables_agree_with_brute_force_and_occupancy_recursion() {
    for (m, seeds) in [(fixtures::tiger(), 0..6u64), (fixtures::random_model(2, true), 6..10)] {
        for seed in seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_joint_policy(&m, m.horizon(), &mut rng);
            for agent in 0..m.n_agents() {
                let tables = evaluate_history(&m, &p, agent).unwrap();
                assert_eq!(tables.len(), m.horizon() + 1);
                assert!(tables.windows(2).all(|w| w[0].t + 1 == w[1].t));
                let s0 = OccupancyState::initial(&m);
                let v = linear_eval(&s0, &tables[0]).unwrap();
                let oracle = brute_force(&m, &p, agent);
                assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
                assert!((evaluate_occupancy(&m, &p, &s0, agent).unwrap() - oracle).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn action_values_average_to_state_values() {
    let m: Model = fixtures::tiger();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_joint_policy(&m, 2, &mut rng);
    let v = evaluate_history(&m, &p, 0).unwrap();
    let q = evaluate_q(&m, &p, 0).unwrap();
    for (qt, vt) in q.iter().zip(&v) {
        for ((x, o), value) in &vt.values {
            let mut avg = 0.0;
            for ((x2, o2, u), qv) in &qt.values {
                if x2 == x && o2 == o {
                    let acts = m.actions_of(*u);
                    let pu: f64 = (0..2).map(|i| p.trees[i].decision_at(o.agent(i)).unwrap()[acts[i]]).product();
                    avg += pu * qv;
                }
            }
            assert!((avg - value).abs() < 1e-9);
        }
    }
}

#[test]
fn deterministic_payoffs_simulate_without_variance() {
    let m: Model = fixtures::one_stage_tiger();
    let r = simulate(&m, &pure_pair(&m, 0, 0), 1000, 3).unwrap();
    assert_eq!(r.mean, vec![1.0, 1.0]);
    assert_eq!(r.stderr, vec![0.0, 0.0]);
}

#[test]
fn simulation_is_reproducible_and_close_to_the_bellman_value() {
    let m: Model = fixtures::tiger();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = random_joint_policy(&m, 2, &mut rng);
    let a = simulate(&m, &p, 20_000, 9).unwrap();
    let b = simulate(&m, &p, 20_000, 9).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    let v = brute_force(&m, &p, 0);
    assert!((a.mean[0] - v).abs() <= 5.0 * a.stderr[0]);
}

#[test]
fn zero_episodes_is_an_error() {
    let m: Model = fixtures::one_stage_tiger();
    assert!(simulate(&m, &pure_pair(&m, 0, 0), 0, 0).is_err());
}
