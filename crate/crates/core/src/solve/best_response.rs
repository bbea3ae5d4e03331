use std::collections::BTreeMap;

use crate::error::Result;
use crate::model::PosgModel;
use crate::occupancy::{
    factorize, others_rule_at, private_branches, private_reward, Key, OccupancyState, PrivateOccupancyState,
};
use crate::policies::{OthersPolicy, PolicyTree, PrivateHistory};
use crate::scalar::Scalar;

/// Optimal deterministic reply of one agent to the others' fixed policies.
#[derive(Debug, Clone)]
pub struct BestResponse<S> {
    pub agent: usize,
    pub value: S,
    pub policy: PolicyTree<S>,
    /// Normalized action values at every explored private history.
    pub q: BTreeMap<PrivateHistory, Vec<S>>,
}

fn argmax_lowest<S: Scalar>(q: &[S], slack: S) -> usize {
    let mut best = 0;
    for (u, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] + slack {
            best = u;
        }
    }
    best
}

struct Search<'a, S> {
    model: &'a PosgModel<S>,
    others: &'a OthersPolicy<S>,
    agent: usize,
    q: BTreeMap<PrivateHistory, Vec<S>>,
    choice: BTreeMap<PrivateHistory, usize>,
}

impl<'a, S: Scalar> Search<'a, S> {
    fn new(model: &'a PosgModel<S>, others: &'a OthersPolicy<S>, agent: usize) -> Self {
        Search { model, others, agent, q: BTreeMap::new(), choice: BTreeMap::new() }
    }

    /// Backward induction over unnormalized weights `Pr(x, o, o^i)` at history `h`.
    fn history_node(&mut self, h: &PrivateHistory, weights: &BTreeMap<Key, S>, t: usize) -> Result<S> {
        let model = self.model;
        if t >= model.horizon() {
            return Ok(S::zero());
        }
        let mass: S = weights.values().copied().sum();
        let histories = {
            let mut hs: Vec<Vec<PrivateHistory>> = vec![Vec::new(); model.n_agents()];
            for (_, o) in weights.keys() {
                for (j, hj) in o.0.iter().enumerate() {
                    if !hs[j].contains(hj) {
                        hs[j].push(hj.clone());
                    }
                }
            }
            hs
        };
        let rule = self.others.decision_rule(t, &histories)?;
        let na = model.n_actions(self.agent);
        let mut q = vec![S::zero(); na];
        for (u_i, qu) in q.iter_mut().enumerate() {
            let mut immediate = S::zero();
            let mut children: Vec<BTreeMap<Key, S>> = vec![BTreeMap::new(); model.n_agent_obs(self.agent)];
            for ((x, o), &w) in weights {
                for (u, pu) in rule.joint_action_dist(model, o, u_i)? {
                    immediate += w * pu * model.reward(self.agent, *x, u);
                    let actions = model.actions_of(u);
                    for &(x2, z, p) in model.dynamics(*x, u) {
                        let zs = model.agent_obs_all(z);
                        *children[zs[self.agent]].entry((x2, o.extended(actions, zs))).or_insert_with(S::zero) +=
                            w * pu * p;
                    }
                }
            }
            let mut future = S::zero();
            for (z, child) in children.iter().enumerate() {
                if child.values().copied().sum::<S>() > S::zero() {
                    future += self.history_node(&h.extended(u_i, z), child, t + 1)?;
                }
            }
            *qu = immediate + model.discount() * future;
        }
        let best = argmax_lowest(&q, S::tolerance() * mass);
        let value = q[best];
        self.q.insert(h.clone(), q.iter().map(|v| *v / mass).collect());
        self.choice.insert(h.clone(), best);
        Ok(value)
    }

    /// Dynamic programming over private occupancy states.
    fn private_node(&mut self, s: &PrivateOccupancyState<S>) -> Result<S> {
        let model = self.model;
        if s.t >= model.horizon() {
            return Ok(S::zero());
        }
        let rule = others_rule_at(model, self.others, s)?;
        let na = model.n_actions(self.agent);
        let mut q = vec![S::zero(); na];
        for (u_i, qu) in q.iter_mut().enumerate() {
            let immediate = private_reward(model, s, &rule, u_i)?;
            let mut future = S::zero();
            for (_, prob, next) in private_branches(model, s, &rule, u_i)? {
                future += prob * self.private_node(&next)?;
            }
            *qu = immediate + model.discount() * future;
        }
        let best = argmax_lowest(&q, S::tolerance());
        let value = q[best];
        self.q.insert(s.anchor.clone(), q);
        self.choice.insert(s.anchor.clone(), best);
        Ok(value)
    }

    fn graft(&self, h: &PrivateHistory, tree: &mut PolicyTree<S>) {
        let Some(&a) = self.choice.get(h) else { return };
        tree.set_pure(h.clone(), a);
        for z in 0..self.model.n_agent_obs(self.agent) {
            self.graft(&h.extended(a, z), tree);
        }
    }

    fn finish(self, anchors: &[PrivateHistory], value: S) -> BestResponse<S> {
        let mut policy = PolicyTree::new(self.agent, self.model.horizon(), self.model.n_actions(self.agent));
        for h in anchors {
            self.graft(h, &mut policy);
        }
        BestResponse { agent: self.agent, value, policy, q: self.q }
    }
}

/// Best response from occupancy state `s` by backward induction over private histories.
pub fn best_response_history_from<S: Scalar>(
    model: &PosgModel<S>,
    others: &OthersPolicy<S>,
    agent: usize,
    s: &OccupancyState<S>,
) -> Result<BestResponse<S>> {
    let mut search = Search::new(model, others, agent);
    let anchors = s.histories(agent);
    let mut value = S::zero();
    for h in &anchors {
        let weights: BTreeMap<Key, S> = s
            .entries
            .iter()
            .filter(|((_, o), _)| o.agent(agent) == h)
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        value += search.history_node(h, &weights, s.t)?;
    }
    Ok(search.finish(&anchors, value))
}

/// Best response from the initial belief by backward induction over private histories.
pub fn best_response_history<S: Scalar>(
    model: &PosgModel<S>,
    others: &OthersPolicy<S>,
    agent: usize,
) -> Result<BestResponse<S>> {
    best_response_history_from(model, others, agent, &OccupancyState::initial(model))
}

/// Best response from occupancy state `s` by dynamic programming over private occupancy states.
pub fn best_response_private_from<S: Scalar>(
    model: &PosgModel<S>,
    others: &OthersPolicy<S>,
    agent: usize,
    s: &OccupancyState<S>,
) -> Result<BestResponse<S>> {
    let mut search = Search::new(model, others, agent);
    let (marginal, _) = factorize(s, agent);
    let mut value = S::zero();
    let mut anchors = Vec::new();
    for (h, w) in &marginal.map {
        let component = PrivateOccupancyState::slice_of(s, agent, h)?;
        value += *w * search.private_node(&component)?;
        anchors.push(h.clone());
    }
    Ok(search.finish(&anchors, value))
}

/// Best response from the initial belief by dynamic programming over private occupancy states.
pub fn best_response_private<S: Scalar>(
    model: &PosgModel<S>,
    others: &OthersPolicy<S>,
    agent: usize,
) -> Result<BestResponse<S>> {
    let start = PrivateOccupancyState::initial(model, model.start(), agent);
    let mut search = Search::new(model, others, agent);
    let value = search.private_node(&start)?;
    Ok(search.finish(&[PrivateHistory::empty()], value))
}

/// Optimal value of the anchored agent from a private occupancy state.
pub fn private_value<S: Scalar>(
    model: &PosgModel<S>,
    others: &OthersPolicy<S>,
    s: &PrivateOccupancyState<S>,
) -> Result<S> {
    Search::new(model, others, s.agent).private_node(s)
}
