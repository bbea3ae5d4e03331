use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::format::sig10;
use crate::model::PosgModel;
use crate::occupancy::{expected_reward, policy_rule, step, Key, OccupancyState};
use crate::policies::{product_dist, ActionChoice, JointHistory, JointPolicy, PrivateHistory};
use crate::scalar::Scalar;

/// Values `υ_t(x, o)` of one agent under a fixed joint policy.
#[derive(Debug, Clone)]
pub struct ValueTable<S> {
    pub agent: usize,
    pub t: usize,
    pub values: BTreeMap<Key, S>,
}

impl<S: Scalar> ValueTable<S> {
    pub fn get(&self, x: usize, o: &JointHistory) -> Option<S> {
        self.values.get(&(x, o.clone())).copied()
    }

    pub fn to_csv(&self, model: &PosgModel<S>) -> String {
        let mut out = String::new();
        for ((x, o), v) in &self.values {
            out.push_str(&format!("{},{},{}\n", model.state_label(*x), o.label(model), sig10(v.as_f64())));
        }
        out
    }
}

/// Action values `q_t(x, o, u)` of one agent under a fixed continuation.
#[derive(Debug, Clone)]
pub struct QTable<S> {
    pub agent: usize,
    pub t: usize,
    pub values: BTreeMap<(usize, JointHistory, usize), S>,
}

/// Joint action distribution of `policy` at joint history `o`.
pub fn policy_action_dist<S: Scalar>(
    model: &PosgModel<S>,
    policy: &JointPolicy<S>,
    o: &JointHistory,
) -> Result<Vec<(usize, S)>> {
    let choices = policy
        .trees
        .iter()
        .zip(&o.0)
        .map(|(tree, h)| {
            tree.nodes.get(h).map(|d| ActionChoice::Mixed(d.as_slice())).ok_or_else(|| {
                Error::UndefinedDecisionRule { agent: tree.agent, history: h.to_string() }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(product_dist(model, &choices))
}

fn reachable_layers<S: Scalar>(
    model: &PosgModel<S>,
    policy: &JointPolicy<S>,
    s: &OccupancyState<S>,
) -> Result<Vec<BTreeSet<Key>>> {
    if s.t > model.horizon() {
        return Err(Error::InvalidArgument(format!("occupancy state at t = {} past the horizon", s.t)));
    }
    if policy.horizon() != model.horizon() {
        return Err(Error::InvalidArgument(format!(
            "policy horizon {} differs from model horizon {}",
            policy.horizon(),
            model.horizon()
        )));
    }
    let mut layers = vec![s.entries.keys().cloned().collect::<BTreeSet<_>>()];
    for _ in s.t..model.horizon() {
        let mut next = BTreeSet::new();
        for (x, o) in layers.last().expect("non-empty") {
            for (u, _) in policy_action_dist(model, policy, o)? {
                let actions = model.actions_of(u);
                for &(x2, z, _) in model.dynamics(*x, u) {
                    next.insert((x2, o.extended(actions, model.agent_obs_all(z))));
                }
            }
        }
        layers.push(next);
    }
    Ok(layers)
}

/// Bellman evaluation over `(state, joint history)` pairs reachable from `s`.
///
/// Returns one table per step from `s.t` to the horizon, in increasing `t`;
/// the last table is identically zero.
pub fn evaluate_from<S: Scalar>(
    model: &PosgModel<S>,
    policy: &JointPolicy<S>,
    agent: usize,
    s: &OccupancyState<S>,
) -> Result<Vec<ValueTable<S>>> {
    let layers = reachable_layers(model, policy, s)?;
    let gamma = model.discount();
    let horizon = model.horizon();
    let mut tables: Vec<ValueTable<S>> = Vec::with_capacity(layers.len());
    let mut next: BTreeMap<Key, S> = layers
        .last()
        .expect("non-empty")
        .iter()
        .map(|k| (k.clone(), S::zero()))
        .collect();
    tables.push(ValueTable { agent, t: horizon, values: next.clone() });
    for (k, layer) in layers.iter().enumerate().rev().skip(1) {
        let mut current = BTreeMap::new();
        for (x, o) in layer {
            let mut v = S::zero();
            for (u, pu) in policy_action_dist(model, policy, o)? {
                let actions = model.actions_of(u);
                let mut future = S::zero();
                for &(x2, z, q) in model.dynamics(*x, u) {
                    let key = (x2, o.extended(actions, model.agent_obs_all(z)));
                    future += q * next[&key];
                }
                v += pu * (model.reward(agent, *x, u) + gamma * future);
            }
            current.insert((*x, o.clone()), v);
        }
        tables.push(ValueTable { agent, t: s.t + k, values: current.clone() });
        next = current;
    }
    tables.reverse();
    Ok(tables)
}

/// Bellman evaluation from the initial occupancy state; tables ordered by `t`.
pub fn evaluate_history<S: Scalar>(
    model: &PosgModel<S>,
    policy: &JointPolicy<S>,
    agent: usize,
) -> Result<Vec<ValueTable<S>>> {
    evaluate_from(model, policy, agent, &OccupancyState::initial(model))
}

/// Action values for every reachable `(x, o)` and every joint action, ordered by `t`.
pub fn evaluate_q<S: Scalar>(
    model: &PosgModel<S>,
    policy: &JointPolicy<S>,
    agent: usize,
) -> Result<Vec<QTable<S>>> {
    let tables = evaluate_history(model, policy, agent)?;
    let gamma = model.discount();
    let mut out = Vec::new();
    for pair in tables.windows(2) {
        let (cur, next) = (&pair[0], &pair[1]);
        let mut values = BTreeMap::new();
        for (x, o) in cur.values.keys() {
            for (u, _) in policy_action_dist(model, policy, o)? {
                let actions = model.actions_of(u);
                let mut future = S::zero();
                for &(x2, z, q) in model.dynamics(*x, u) {
                    future += q * next.values[&(x2, o.extended(actions, model.agent_obs_all(z)))];
                }
                values.insert((*x, o.clone(), u), model.reward(agent, *x, u) + gamma * future);
            }
        }
        out.push(QTable { agent, t: cur.t, values });
    }
    Ok(out)
}

/// Value of `policy` from occupancy state `s` through the occupancy dynamics.
pub fn evaluate_occupancy<S: Scalar>(
    model: &PosgModel<S>,
    policy: &JointPolicy<S>,
    s: &OccupancyState<S>,
    agent: usize,
) -> Result<S> {
    if s.t >= model.horizon() {
        return Ok(S::zero());
    }
    let a = policy_rule(model, policy, s)?;
    let r = expected_reward(model, s, &a, agent)?;
    let mut future = S::zero();
    for b in step(model, s, &a)? {
        future += b.prob * evaluate_occupancy(model, policy, &b.next, agent)?;
    }
    Ok(r + model.discount() * future)
}

/// `Σ s(x,o)·table(x,o)`; missing table entries count as zero.
pub fn linear_eval<S: Scalar>(s: &OccupancyState<S>, table: &ValueTable<S>) -> Result<S> {
    if s.t != table.t {
        return Err(Error::TimeMismatch { expected: table.t, found: s.t });
    }
    let mut missing = 0usize;
    let mut acc = S::zero();
    for (k, &p) in &s.entries {
        match table.values.get(k) {
            Some(&v) => acc += p * v,
            None => missing += 1,
        }
    }
    if missing > 0 {
        log::warn!("linear evaluation treated {missing} missing table entries as zero");
    }
    Ok(acc)
}

/// Monte Carlo estimate of every agent's discounted return.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub episodes: usize,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub seed: u64,
}

impl SimResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("agent,episodes,mean,stderr,seed\n");
        for (i, (m, e)) in self.mean.iter().zip(&self.stderr).enumerate() {
            out.push_str(&format!("{},{},{},{},{}\n", i + 1, self.episodes, sig10(*m), sig10(*e), self.seed));
        }
        out
    }
}

fn sample_index<R: Rng>(rng: &mut R, weights: impl Iterator<Item = f64>) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        acc += w;
        last = k;
        if r < acc {
            return k;
        }
    }
    last
}

fn run_episode<S: Scalar>(model: &PosgModel<S>, policy: &JointPolicy<S>, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let n = model.n_agents();
    let gamma = model.discount().as_f64();
    let mut x = sample_index(rng, model.start().iter().map(|p| p.as_f64()));
    let mut histories = vec![PrivateHistory::empty(); n];
    let mut returns = vec![0.0; n];
    let mut discount = 1.0;
    for _ in 0..model.horizon() {
        let mut actions = Vec::with_capacity(n);
        for (tree, h) in policy.trees.iter().zip(&histories) {
            let d = tree.nodes.get(h).ok_or_else(|| Error::UndefinedDecisionRule {
                agent: tree.agent,
                history: h.to_string(),
            })?;
            actions.push(sample_index(rng, d.iter().map(|p| p.as_f64())));
        }
        let u = model.joint_action(&actions);
        for (i, r) in returns.iter_mut().enumerate() {
            *r += discount * model.reward(i, x, u).as_f64();
        }
        let succ = model.dynamics(x, u);
        let k = sample_index(rng, succ.iter().map(|(_, _, p)| p.as_f64()));
        let (x2, z, _) = succ[k];
        for (i, h) in histories.iter_mut().enumerate() {
            *h = h.extended(actions[i], model.agent_obs(z, i));
        }
        x = x2;
        discount *= gamma;
    }
    Ok(returns)
}

/// Simulates `episodes` episodes in parallel.
///
/// Episode `e` draws from a ChaCha8 generator seeded with `seed` on stream `e`,
/// so results do not depend on thread scheduling.
pub fn simulate<S: Scalar>(
    model: &PosgModel<S>,
    policy: &JointPolicy<S>,
    episodes: usize,
    seed: u64,
) -> Result<SimResult> {
    if episodes == 0 {
        return Err(Error::InvalidArgument("at least one episode is required".into()));
    }
    let returns = (0..episodes)
        .into_par_iter()
        .map(|e| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(e as u64);
            run_episode(model, policy, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = model.n_agents();
    let count = episodes as f64;
    let mut mean = vec![0.0; n];
    for r in &returns {
        for i in 0..n {
            mean[i] += r[i];
        }
    }
    for m in &mut mean {
        *m /= count;
    }
    let mut stderr = vec![0.0; n];
    if episodes > 1 {
        for i in 0..n {
            let var = returns.iter().map(|r| (r[i] - mean[i]).powi(2)).sum::<f64>() / (count - 1.0);
            stderr[i] = (var / count).sqrt();
        }
    }
    Ok(SimResult { episodes, mean, stderr, seed })
}
