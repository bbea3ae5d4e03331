use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::format::sig10;
use crate::model::PosgModel;
use crate::policies::{
    JointDecisionRule, JointHistory, JointPolicy, OthersDecisionRule, OthersPolicy, PrivateHistory,
};
use crate::scalar::Scalar;

pub type Key = (usize, JointHistory);

/// Sparse distribution over `(state, joint history)` at step `t`.
#[derive(Debug, Clone)]
pub struct OccupancyState<S> {
    pub t: usize,
    pub entries: BTreeMap<Key, S>,
}

/// Drops entries below the pruning threshold and rescales the rest to sum to 1.
fn normalize<S: Scalar>(entries: BTreeMap<Key, S>) -> (S, BTreeMap<Key, S>) {
    let total: S = entries.values().copied().sum();
    if total <= S::zero() {
        return (total, BTreeMap::new());
    }
    let thr = S::prune_threshold();
    let kept: BTreeMap<Key, S> = entries
        .into_iter()
        .map(|(k, v)| (k, v / total))
        .filter(|(_, v)| *v >= thr)
        .collect();
    let kept_total: S = kept.values().copied().sum();
    (total, kept.into_iter().map(|(k, v)| (k, v / kept_total)).collect())
}

impl<S: Scalar> OccupancyState<S> {
    /// Builds a state from raw weights, pruning and normalizing them.
    pub fn from_weights(t: usize, weights: BTreeMap<Key, S>) -> Result<Self> {
        let (total, entries) = normalize(weights);
        if total <= S::zero() || entries.is_empty() {
            return Err(Error::InvalidArgument("occupancy state with zero mass".into()));
        }
        if entries.keys().any(|(_, o)| o.t() != t) {
            return Err(Error::InvalidArgument(format!("history length differs from t = {t}")));
        }
        Ok(OccupancyState { t, entries })
    }

    /// Initial occupancy state: the start belief over empty joint histories.
    pub fn initial(model: &PosgModel<S>) -> Self {
        Self::from_belief(model, model.start())
    }

    pub fn from_belief(model: &PosgModel<S>, belief: &[S]) -> Self {
        let empty = JointHistory::empty(model.n_agents());
        let entries = belief
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > S::zero())
            .map(|(x, &p)| ((x, empty.clone()), p))
            .collect();
        OccupancyState { t: 0, entries }
    }

    pub fn get(&self, x: usize, o: &JointHistory) -> S {
        self.entries.get(&(x, o.clone())).copied().unwrap_or_else(S::zero)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> S {
        self.entries.values().copied().sum()
    }

    /// Private histories of `agent` in the support.
    pub fn histories(&self, agent: usize) -> Vec<PrivateHistory> {
        self.entries
            .keys()
            .map(|(_, o)| o.agent(agent).clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Support histories of every agent.
    pub fn all_histories(&self, n_agents: usize) -> Vec<Vec<PrivateHistory>> {
        (0..n_agents).map(|i| self.histories(i)).collect()
    }

    /// Same support after pruning and pointwise difference at most `tol`.
    pub fn approx_eq(&self, other: &Self, tol: S) -> bool {
        self.t == other.t
            && self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|((ka, va), (kb, vb))| ka == kb && (*va - *vb).abs() <= tol)
    }

    /// Largest pointwise difference over the union of supports.
    pub fn max_diff(&self, other: &Self) -> S {
        let keys: BTreeSet<&Key> = self.entries.keys().chain(other.entries.keys()).collect();
        keys.into_iter()
            .map(|k| {
                let a = self.entries.get(k).copied().unwrap_or_else(S::zero);
                let b = other.entries.get(k).copied().unwrap_or_else(S::zero);
                (a - b).abs()
            })
            .fold(S::zero(), S::max)
    }

    /// 1-norm distance over the union of supports.
    pub fn l1_distance(&self, other: &Self) -> S {
        let keys: BTreeSet<&Key> = self.entries.keys().chain(other.entries.keys()).collect();
        keys.into_iter()
            .map(|k| {
                let a = self.entries.get(k).copied().unwrap_or_else(S::zero);
                let b = other.entries.get(k).copied().unwrap_or_else(S::zero);
                (a - b).abs()
            })
            .sum()
    }

    /// Convex combination `Σ λ_k s_k` of states sharing a time step.
    pub fn mix(parts: &[(S, &Self)]) -> Result<Self> {
        let t = parts
            .first()
            .map(|(_, s)| s.t)
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let mut acc: BTreeMap<Key, S> = BTreeMap::new();
        for (w, s) in parts {
            if s.t != t {
                return Err(Error::TimeMismatch { expected: t, found: s.t });
            }
            for (k, v) in &s.entries {
                *acc.entry(k.clone()).or_insert_with(S::zero) += *w * *v;
            }
        }
        Self::from_weights(t, acc)
    }

    /// CSV rows `state,history_1,...,history_n,probability` in canonical order.
    pub fn to_csv(&self, model: &PosgModel<S>) -> String {
        let mut out = String::new();
        for ((x, o), p) in &self.entries {
            out.push_str(model.state_label(*x));
            for (i, h) in o.0.iter().enumerate() {
                out.push(',');
                out.push_str(&h.label(model, i));
            }
            out.push(',');
            out.push_str(&sig10(p.as_f64()));
            out.push('\n');
        }
        out
    }

    /// Indented text tree: one block per state, one line per joint history.
    pub fn to_tree_text(&self, model: &PosgModel<S>) -> String {
        let mut out = format!("t={}\n", self.t);
        let mut current = None;
        for ((x, o), p) in &self.entries {
            if current != Some(*x) {
                out.push_str(model.state_label(*x));
                out.push('\n');
                current = Some(*x);
            }
            let hs: Vec<String> = o.0.iter().enumerate().map(|(i, h)| h.label(model, i)).collect();
            out.push_str(&format!("  [{}] {}\n", hs.join(" | "), sig10(p.as_f64())));
        }
        out
    }
}

/// One public-observation branch of an occupancy update.
#[derive(Debug, Clone)]
pub struct Branch<S> {
    pub public: usize,
    pub prob: S,
    pub next: OccupancyState<S>,
}

/// Occupancy update under joint decision rule `a`, split by public observation.
pub fn step<S: Scalar>(
    model: &PosgModel<S>,
    s: &OccupancyState<S>,
    a: &JointDecisionRule<S>,
) -> Result<Vec<Branch<S>>> {
    if s.t >= model.horizon() {
        return Err(Error::InvalidArgument(format!(
            "occupancy state at t = {} is at or past the horizon",
            s.t
        )));
    }
    let mut per_w: Vec<BTreeMap<Key, S>> = vec![BTreeMap::new(); model.n_public_obs()];
    for ((x, o), &p) in &s.entries {
        for (u, pu) in a.joint_action_dist(model, o)? {
            let actions = model.actions_of(u);
            for &(x2, z, q) in model.dynamics(*x, u) {
                let next = o.extended(actions, model.agent_obs_all(z));
                *per_w[model.public_of(z)].entry((x2, next)).or_insert_with(S::zero) += p * pu * q;
            }
        }
    }
    let grand: S = per_w.iter().flat_map(|m| m.values()).copied().sum();
    let mut out = Vec::new();
    for (w, weights) in per_w.into_iter().enumerate() {
        let mass: S = weights.values().copied().sum();
        if mass / grand < S::prune_threshold() {
            continue;
        }
        let (_, entries) = normalize(weights);
        out.push(Branch { public: w, prob: mass / grand, next: OccupancyState { t: s.t + 1, entries } });
    }
    let total: S = out.iter().map(|b| b.prob).sum();
    for b in &mut out {
        b.prob = b.prob / total;
    }
    Ok(out)
}

/// Expected immediate reward of `agent` at `s` under `a`.
pub fn expected_reward<S: Scalar>(
    model: &PosgModel<S>,
    s: &OccupancyState<S>,
    a: &JointDecisionRule<S>,
    agent: usize,
) -> Result<S> {
    let mut acc = S::zero();
    for ((x, o), &p) in &s.entries {
        for (u, pu) in a.joint_action_dist(model, o)? {
            acc = acc + p * pu * model.reward(agent, *x, u);
        }
    }
    Ok(acc)
}

/// Distribution over agent `agent`'s private histories.
#[derive(Debug, Clone)]
pub struct MarginalOccupancy<S> {
    pub agent: usize,
    pub map: BTreeMap<PrivateHistory, S>,
}

/// Per private history of `agent`, the conditional distribution over `(state, joint history)`.
#[derive(Debug, Clone)]
pub struct ConditionalOccupancy<S> {
    pub agent: usize,
    pub slices: BTreeMap<PrivateHistory, BTreeMap<Key, S>>,
}

pub fn factorize<S: Scalar>(s: &OccupancyState<S>, agent: usize) -> (MarginalOccupancy<S>, ConditionalOccupancy<S>) {
    let mut slices: BTreeMap<PrivateHistory, BTreeMap<Key, S>> = BTreeMap::new();
    for (k, &p) in &s.entries {
        slices.entry(k.1.agent(agent).clone()).or_default().insert(k.clone(), p);
    }
    let mut map = BTreeMap::new();
    for (h, slice) in &mut slices {
        let m: S = slice.values().copied().sum();
        for v in slice.values_mut() {
            *v = *v / m;
        }
        map.insert(h.clone(), m);
    }
    (MarginalOccupancy { agent, map }, ConditionalOccupancy { agent, slices })
}

/// Rebuilds `m(o^i)·c(x,o|o^i)` at step `t`.
pub fn recompose<S: Scalar>(
    t: usize,
    m: &MarginalOccupancy<S>,
    c: &ConditionalOccupancy<S>,
) -> Result<OccupancyState<S>> {
    let mut entries = BTreeMap::new();
    for (h, &w) in &m.map {
        let slice = c
            .slices
            .get(h)
            .ok_or_else(|| Error::InvalidArgument(format!("no conditional slice for {h}")))?;
        for (k, &v) in slice {
            entries.insert(k.clone(), w * v);
        }
    }
    OccupancyState::from_weights(t, entries)
}

/// Distribution over `(state, joint history)` given agent `agent`'s private history `anchor`.
#[derive(Debug, Clone)]
pub struct PrivateOccupancyState<S> {
    pub agent: usize,
    pub anchor: PrivateHistory,
    pub t: usize,
    pub entries: BTreeMap<Key, S>,
}

impl<S: Scalar> PrivateOccupancyState<S> {
    /// The start belief over empty histories, anchored at the empty history.
    pub fn initial(model: &PosgModel<S>, start: &[S], agent: usize) -> Self {
        let s = OccupancyState::from_belief(model, start);
        PrivateOccupancyState { agent, anchor: PrivateHistory::empty(), t: 0, entries: s.entries }
    }

    /// Views a private occupancy state as an ordinary occupancy state.
    pub fn as_occupancy(&self) -> OccupancyState<S> {
        OccupancyState { t: self.t, entries: self.entries.clone() }
    }

    /// The normalized slice of `s` at `anchor`.
    pub fn slice_of(s: &OccupancyState<S>, agent: usize, anchor: &PrivateHistory) -> Result<Self> {
        let weights: BTreeMap<Key, S> = s
            .entries
            .iter()
            .filter(|(k, _)| k.1.agent(agent) == anchor)
            .map(|(k, v)| (k.clone(), *v))
            .collect();
        let (total, entries) = normalize(weights);
        if total <= S::zero() {
            return Err(Error::UnreachableHistory(anchor.to_string()));
        }
        Ok(PrivateOccupancyState { agent, anchor: anchor.clone(), t: s.t, entries })
    }

    /// Others' support histories per agent; agent `agent` maps to its anchor.
    pub fn histories(&self, n_agents: usize) -> Vec<Vec<PrivateHistory>> {
        self.as_occupancy().all_histories(n_agents)
    }
}

fn others_rule_for<S: Scalar>(
    model: &PosgModel<S>,
    others: &OthersPolicy<S>,
    s: &PrivateOccupancyState<S>,
) -> Result<OthersDecisionRule<S>> {
    others.decision_rule(s.t, &s.histories(model.n_agents()))
}

/// Unnormalized successor weights per own observation after own action `u_i`.
fn private_successors<S: Scalar>(
    model: &PosgModel<S>,
    s: &PrivateOccupancyState<S>,
    others_rule: &OthersDecisionRule<S>,
    u_i: usize,
) -> Result<Vec<BTreeMap<Key, S>>> {
    let agent = s.agent;
    let mut per_z: Vec<BTreeMap<Key, S>> = vec![BTreeMap::new(); model.n_agent_obs(agent)];
    for ((x, o), &p) in &s.entries {
        for (u, pu) in others_rule.joint_action_dist(model, o, u_i)? {
            let actions = model.actions_of(u);
            for &(x2, z, q) in model.dynamics(*x, u) {
                let zs = model.agent_obs_all(z);
                let next = o.extended(actions, zs);
                *per_z[zs[agent]].entry((x2, next)).or_insert_with(S::zero) += p * pu * q;
            }
        }
    }
    Ok(per_z)
}

/// Probability of each own observation after own action `u_i`.
pub fn private_observation_probs<S: Scalar>(
    model: &PosgModel<S>,
    s: &PrivateOccupancyState<S>,
    others_rule: &OthersDecisionRule<S>,
    u_i: usize,
) -> Result<Vec<S>> {
    let per_z = private_successors(model, s, others_rule, u_i)?;
    Ok(per_z.iter().map(|m| m.values().copied().sum()).collect())
}

/// Private occupancy update: probability of `z_i` and the next private occupancy state.
pub fn private_step<S: Scalar>(
    model: &PosgModel<S>,
    s: &PrivateOccupancyState<S>,
    others_rule: &OthersDecisionRule<S>,
    u_i: usize,
    z_i: usize,
) -> Result<(S, PrivateOccupancyState<S>)> {
    if s.t >= model.horizon() {
        return Err(Error::InvalidArgument(format!(
            "private occupancy state at t = {} is at or past the horizon",
            s.t
        )));
    }
    let mut per_z = private_successors(model, s, others_rule, u_i)?;
    let weights = std::mem::take(&mut per_z[z_i]);
    let mass: S = weights.values().copied().sum();
    if mass <= S::zero() {
        return Err(Error::ImpossibleObservation(format!(
            "{} after {}",
            model.agent_obs_label(s.agent, z_i),
            model.action_label(s.agent, u_i)
        )));
    }
    let (_, entries) = normalize(weights);
    Ok((
        mass,
        PrivateOccupancyState { agent: s.agent, anchor: s.anchor.extended(u_i, z_i), t: s.t + 1, entries },
    ))
}

/// Every own-observation branch after own action `u_i`: `(z_i, ω^i, next)` for `ω^i > 0`.
pub fn private_branches<S: Scalar>(
    model: &PosgModel<S>,
    s: &PrivateOccupancyState<S>,
    others_rule: &OthersDecisionRule<S>,
    u_i: usize,
) -> Result<Vec<(usize, S, PrivateOccupancyState<S>)>> {
    let per_z = private_successors(model, s, others_rule, u_i)?;
    let mut out = Vec::new();
    for (z, weights) in per_z.into_iter().enumerate() {
        let mass: S = weights.values().copied().sum();
        if mass <= S::zero() {
            continue;
        }
        let (_, entries) = normalize(weights);
        out.push((
            z,
            mass,
            PrivateOccupancyState { agent: s.agent, anchor: s.anchor.extended(u_i, z), t: s.t + 1, entries },
        ));
    }
    Ok(out)
}

/// Expected immediate reward of the anchored agent when it plays `u_i`.
pub fn private_reward<S: Scalar>(
    model: &PosgModel<S>,
    s: &PrivateOccupancyState<S>,
    others_rule: &OthersDecisionRule<S>,
    u_i: usize,
) -> Result<S> {
    let mut acc = S::zero();
    for ((x, o), &p) in &s.entries {
        for (u, pu) in others_rule.joint_action_dist(model, o, u_i)? {
            acc = acc + p * pu * model.reward(s.agent, *x, u);
        }
    }
    Ok(acc)
}

/// Private occupancy state of `agent` at `anchor` given `start` and the others' policy.
pub fn private_occupancy<S: Scalar>(
    model: &PosgModel<S>,
    start: &[S],
    others: &OthersPolicy<S>,
    agent: usize,
    anchor: &PrivateHistory,
) -> Result<PrivateOccupancyState<S>> {
    let mut s = PrivateOccupancyState::initial(model, start, agent);
    for &(u, z) in anchor.steps() {
        let rule = others_rule_for(model, others, &s)?;
        s = match private_step(model, &s, &rule, u, z) {
            Ok((_, next)) => next,
            Err(Error::ImpossibleObservation(_)) => {
                return Err(Error::UnreachableHistory(anchor.label(model, agent)));
            }
            Err(e) => return Err(e),
        };
    }
    Ok(s)
}

/// Others' decision rule at `s`, taken from their policy.
pub fn others_rule_at<S: Scalar>(
    model: &PosgModel<S>,
    others: &OthersPolicy<S>,
    s: &PrivateOccupancyState<S>,
) -> Result<OthersDecisionRule<S>> {
    others_rule_for(model, others, s)
}

/// Weighted private occupancy states of one agent.
#[derive(Debug, Clone)]
pub struct Mixture<S> {
    pub agent: usize,
    pub components: Vec<(S, PrivateOccupancyState<S>)>,
}

impl<S: Scalar> Mixture<S> {
    pub fn weights(&self) -> Vec<S> {
        self.components.iter().map(|(w, _)| *w).collect()
    }

    pub fn recombine(&self) -> Result<OccupancyState<S>> {
        let t = self
            .components
            .first()
            .map(|(_, c)| c.t)
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let mut acc: BTreeMap<Key, S> = BTreeMap::new();
        for (w, c) in &self.components {
            for (k, v) in &c.entries {
                *acc.entry(k.clone()).or_insert_with(S::zero) += *w * *v;
            }
        }
        OccupancyState::from_weights(t, acc)
    }
}

/// Writes `s` as a mixture of agent `agent`'s private occupancy states.
///
/// `policy` must be the joint policy prefix that generated `s` from `start`;
/// the components come from it and the weights from the marginal of `s`.
pub fn decompose<S: Scalar>(
    model: &PosgModel<S>,
    start: &[S],
    policy: &JointPolicy<S>,
    s: &OccupancyState<S>,
    agent: usize,
) -> Result<Mixture<S>> {
    let (marginal, _) = factorize(s, agent);
    let others = policy.others(agent);
    let tol = S::tolerance();
    let mut components = Vec::new();
    for (h, w) in marginal.map {
        let c = private_occupancy(model, start, &others, agent, &h).map_err(|e| match e {
            Error::UnreachableHistory(h) => Error::InconsistentOccupancy(format!(
                "history {h} is unreachable under the generating policy"
            )),
            other => other,
        })?;
        let slice = PrivateOccupancyState::slice_of(s, agent, &h)?;
        let gap = slice.as_occupancy().max_diff(&c.as_occupancy());
        if gap > tol {
            return Err(Error::InconsistentOccupancy(format!(
                "component at {} differs by {} from the generating policy",
                h.label(model, agent),
                gap
            )));
        }
        components.push((w, c));
    }
    Ok(Mixture { agent, components })
}

/// Public stream and decision rules that identify an occupancy state.
#[derive(Debug, Clone)]
pub struct PlanTimeHistory<S> {
    pub start: Vec<S>,
    pub rules: Vec<JointDecisionRule<S>>,
    pub public: Vec<usize>,
}

impl<S: Scalar> PlanTimeHistory<S> {
    /// Replays the history through the occupancy dynamics.
    pub fn occupancy(&self, model: &PosgModel<S>) -> Result<OccupancyState<S>> {
        if self.rules.len() != self.public.len() {
            return Err(Error::InvalidArgument("rule and public stream lengths differ".into()));
        }
        let mut s = OccupancyState::from_belief(model, &self.start);
        for (a, &w) in self.rules.iter().zip(&self.public) {
            s = step(model, &s, a)?
                .into_iter()
                .find(|b| b.public == w)
                .map(|b| b.next)
                .ok_or_else(|| Error::ImpossibleObservation(model.public_label(w).to_string()))?;
        }
        Ok(s)
    }
}

/// Joint decision rule of `policy` on the support of `s`.
pub fn policy_rule<S: Scalar>(
    model: &PosgModel<S>,
    policy: &JointPolicy<S>,
    s: &OccupancyState<S>,
) -> Result<JointDecisionRule<S>> {
    policy.decision_rule(s.t, &s.all_histories(model.n_agents()))
}
