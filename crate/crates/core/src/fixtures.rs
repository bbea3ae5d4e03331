//! Bundled models used by tests, the verification harness and the CLI.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{ModelTables, PosgModel};
use crate::parse::parse_posg;
use crate::policies::random_distribution;
use crate::scalar::Scalar;

pub const TIGER: &str = include_str!("../fixtures/tiger.posg");
pub const TIGER_ZS: &str = include_str!("../fixtures/tiger-zs.posg");
pub const ONE_STAGE_TIGER: &str = include_str!("../fixtures/tiger-figure7.posg");
pub const STACKELBERG_2X2: &str = include_str!("../fixtures/stackelberg-2x2.posg");
pub const MINIMAL: &str = include_str!("../fixtures/minimal.posg");

/// Two-agent tiger with a shared reward, horizon 2.
pub fn tiger<S: Scalar>() -> PosgModel<S> {
    parse_posg(TIGER).expect("bundled fixture parses")
}

/// Two-agent tiger where agent 2 receives the negation of agent 1's reward.
pub fn tiger_zs<S: Scalar>() -> PosgModel<S> {
    parse_posg(TIGER_ZS).expect("bundled fixture parses")
}

/// One-stage tiger with the listen/open payoff matrix shared by both agents.
pub fn one_stage_tiger<S: Scalar>() -> PosgModel<S> {
    parse_posg(ONE_STAGE_TIGER).expect("bundled fixture parses")
}

pub fn stackelberg_2x2<S: Scalar>() -> PosgModel<S> {
    parse_posg(STACKELBERG_2X2).expect("bundled fixture parses")
}

pub fn minimal<S: Scalar>() -> PosgModel<S> {
    parse_posg(MINIMAL).expect("bundled fixture parses")
}

/// Looks up a bundled fixture by file stem.
pub fn by_name<S: Scalar>(name: &str) -> Option<PosgModel<S>> {
    match name {
        "tiger" => Some(tiger()),
        "tiger-zs" => Some(tiger_zs()),
        "tiger-figure7" => Some(one_stage_tiger()),
        "stackelberg-2x2" => Some(stackelberg_2x2()),
        "minimal" => Some(minimal()),
        _ => None,
    }
}

/// Random two-agent model with 2 states, 2 actions and 2 private observations per agent.
///
/// With `public` set, the model also emits one of two public observations.
/// Horizon 3, discount 0.95, rewards in [-1, 1] drawn independently per agent.
pub fn random_model<S: Scalar>(seed: u64, public: bool) -> PosgModel<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (nx, nu, nz_private) = (2usize, 4usize, 4usize);
    let nw = if public { 2 } else { 1 };
    let nz = nw * nz_private;
    let mut transition = Vec::with_capacity(nu * nx * nx);
    for _ in 0..nu * nx {
        transition.extend(random_distribution::<S, _>(&mut rng, nx));
    }
    let mut observation = Vec::with_capacity(nu * nx * nz);
    for _ in 0..nu * nx {
        observation.extend(random_distribution::<S, _>(&mut rng, nz));
    }
    let rewards = (0..2 * nx * nu).map(|_| S::lit(rng.random_range(-1.0..=1.0))).collect();
    let labels = |prefix: &str, n: usize| (0..n).map(|k| format!("{prefix}{k}")).collect::<Vec<_>>();
    let tables = ModelTables {
        states: labels("x", nx),
        actions: vec![labels("a", 2), labels("b", 2)],
        private_obs: vec![labels("y", 2), labels("z", 2)],
        public_obs: if public { labels("w", 2) } else { Vec::new() },
        transition,
        observation,
        rewards,
        discount: S::lit(0.95),
        horizon: 3,
        start: random_distribution(&mut rng, nx),
        criterion: None,
    };
    PosgModel::from_tables(tables).expect("random model is well formed")
}

/// Tiger variant where agent 2 also sees agent 1's last action and observation.
///
/// Agent 2's observation labels read `u1/z1/z2`, so its private history
/// determines agent 1's history.
pub fn one_sided_tiger<S: Scalar>() -> Result<PosgModel<S>> {
    let base: PosgModel<S> = tiger();
    let nx = base.n_states();
    let nu = base.n_joint_actions();
    let (na1, nz1, nz2) = (base.n_actions(0), base.n_private_obs(0), base.n_private_obs(1));
    let nz2_wide = na1 * nz1 * nz2;
    let nz = nz1 * nz2_wide;
    let mut observation = vec![S::zero(); nu * nx * nz];
    for u in 0..nu {
        let u1 = base.action_of(u, 0);
        for x2 in 0..nx {
            for z1 in 0..nz1 {
                for z2 in 0..nz2 {
                    let p = base.observation(u, x2, base.joint_obs(0, &[z1, z2]));
                    let wide = (u1 * nz1 + z1) * nz2 + z2;
                    observation[(u * nx + x2) * nz + z1 * nz2_wide + wide] = p;
                }
            }
        }
    }
    let t = base.tables();
    let mut wide_labels = Vec::with_capacity(nz2_wide);
    for u1 in 0..na1 {
        for z1 in 0..nz1 {
            for z2 in 0..nz2 {
                wide_labels.push(format!(
                    "{}/{}/{}",
                    t.actions[0][u1], t.private_obs[0][z1], t.private_obs[1][z2]
                ));
            }
        }
    }
    PosgModel::from_tables(ModelTables {
        private_obs: vec![t.private_obs[0].clone(), wide_labels],
        public_obs: Vec::new(),
        observation,
        ..t.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_fixtures_parse() {
        for name in ["tiger", "tiger-zs", "tiger-figure7", "stackelberg-2x2", "minimal"] {
            assert!(by_name::<f64>(name).is_some(), "{name}");
        }
        assert!(by_name::<f64>("nope").is_none());
    }

    #[test]
    fn random_models_are_reproducible() {
        let a: PosgModel<f64> = random_model(3, true);
        let b: PosgModel<f64> = random_model(3, true);
        assert_eq!(a.tables().transition, b.tables().transition);
        assert_eq!(a.n_public_obs(), 2);
        assert_eq!(random_model::<f64>(3, false).n_public_obs(), 1);
    }

    #[test]
    fn one_sided_tiger_has_wide_observations() {
        let m: PosgModel<f64> = one_sided_tiger().unwrap();
        assert_eq!(m.n_agent_obs(1), 12);
        assert_eq!(m.n_joint_obs(), 24);
    }
}
