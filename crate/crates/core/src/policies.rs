use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::PosgModel;
use crate::scalar::Scalar;

/// A private history `(u_0, z_1, ..., u_{t-1}, z_t)` stored as action/observation pairs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct PrivateHistory(pub Vec<(usize, usize)>);

impl PrivateHistory {
    pub fn empty() -> Self {
        PrivateHistory(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn steps(&self) -> &[(usize, usize)] {
        &self.0
    }

    pub fn extended(&self, action: usize, obs: usize) -> Self {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push((action, obs));
        PrivateHistory(v)
    }

    pub fn prefix(&self, t: usize) -> Self {
        PrivateHistory(self.0[..t].to_vec())
    }

    /// Returns the suffix after `base` when `base` is a prefix of `self`.
    pub fn strip_prefix(&self, base: &PrivateHistory) -> Option<PrivateHistory> {
        self.0
            .starts_with(&base.0)
            .then(|| PrivateHistory(self.0[base.len()..].to_vec()))
    }

    /// `action:obs/action:obs` with labels, or `-` when empty.
    pub fn label<S: Scalar>(&self, model: &PosgModel<S>, agent: usize) -> String {
        if self.0.is_empty() {
            return "-".to_string();
        }
        self.0
            .iter()
            .map(|&(u, z)| format!("{}:{}", model.action_label(agent, u), model.agent_obs_label(agent, z)))
            .collect::<Vec<_>>()
            .join("/")
    }
}

impl fmt::Display for PrivateHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("-");
        }
        let parts: Vec<String> = self.0.iter().map(|(u, z)| format!("{u}:{z}")).collect();
        f.write_str(&parts.join("/"))
    }
}

/// One private history per agent, all of equal length.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct JointHistory(pub Vec<PrivateHistory>);

impl JointHistory {
    pub fn empty(n_agents: usize) -> Self {
        JointHistory(vec![PrivateHistory::empty(); n_agents])
    }

    pub fn t(&self) -> usize {
        self.0.first().map_or(0, PrivateHistory::len)
    }

    pub fn agent(&self, i: usize) -> &PrivateHistory {
        &self.0[i]
    }

    pub fn extended(&self, actions: &[usize], obs: &[usize]) -> Self {
        JointHistory(
            self.0
                .iter()
                .zip(actions.iter().zip(obs))
                .map(|(h, (&u, &z))| h.extended(u, z))
                .collect(),
        )
    }

    pub fn label<S: Scalar>(&self, model: &PosgModel<S>) -> String {
        self.0
            .iter()
            .enumerate()
            .map(|(i, h)| h.label(model, i))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for JointHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(" | "))
    }
}

/// Per-step private decision rule: private history to action distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRule<S> {
    pub agent: usize,
    pub t: usize,
    pub map: BTreeMap<PrivateHistory, Vec<S>>,
}

impl<S: Scalar> DecisionRule<S> {
    pub fn get(&self, h: &PrivateHistory) -> Result<&[S]> {
        self.map.get(h).map(Vec::as_slice).ok_or_else(|| Error::UndefinedDecisionRule {
            agent: self.agent,
            history: h.to_string(),
        })
    }

    /// Rule playing `dist` at every listed history.
    pub fn constant<'a>(agent: usize, t: usize, histories: impl IntoIterator<Item = &'a PrivateHistory>, dist: &[S]) -> Self {
        DecisionRule {
            agent,
            t,
            map: histories.into_iter().map(|h| (h.clone(), dist.to_vec())).collect(),
        }
    }
}

/// Decision rules of every agent at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDecisionRule<S> {
    pub rules: Vec<DecisionRule<S>>,
}

impl<S: Scalar> JointDecisionRule<S> {
    /// Positive-probability joint actions `(u, a(u|o))` at joint history `o`.
    pub fn joint_action_dist(&self, model: &PosgModel<S>, o: &JointHistory) -> Result<Vec<(usize, S)>> {
        let choices = self
            .rules
            .iter()
            .zip(&o.0)
            .map(|(r, h)| r.get(h).map(ActionChoice::Mixed))
            .collect::<Result<Vec<_>>>()?;
        Ok(product_dist(model, &choices))
    }
}

/// Decision rules of every agent except `excluded` at one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct OthersDecisionRule<S> {
    pub excluded: usize,
    pub rules: Vec<Option<DecisionRule<S>>>,
}

impl<S: Scalar> OthersDecisionRule<S> {
    /// Joint actions `(u, a^{¬i}(u^{¬i}|o^{¬i}))` with agent `excluded` fixed to `own_action`.
    pub fn joint_action_dist(
        &self,
        model: &PosgModel<S>,
        o: &JointHistory,
        own_action: usize,
    ) -> Result<Vec<(usize, S)>> {
        let choices = self
            .rules
            .iter()
            .enumerate()
            .map(|(j, r)| {
                if j == self.excluded {
                    Ok(ActionChoice::Fixed(own_action))
                } else {
                    let r = r.as_ref().ok_or_else(|| Error::UndefinedDecisionRule {
                        agent: j,
                        history: o.agent(j).to_string(),
                    })?;
                    r.get(o.agent(j)).map(ActionChoice::Mixed)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(product_dist(model, &choices))
    }
}

#[derive(Debug, Clone, Copy)]
pub enum ActionChoice<'a, S> {
    Fixed(usize),
    Mixed(&'a [S]),
}

/// Product distribution over joint actions, zero-probability entries omitted.
pub fn product_dist<S: Scalar>(model: &PosgModel<S>, choices: &[ActionChoice<'_, S>]) -> Vec<(usize, S)> {
    let mut out = vec![(0usize, S::one())];
    for (i, c) in choices.iter().enumerate() {
        let na = model.n_actions(i);
        let mut next = Vec::with_capacity(out.len() * na);
        for &(u, p) in &out {
            match c {
                ActionChoice::Fixed(a) => next.push((u * na + a, p)),
                ActionChoice::Mixed(dist) => {
                    for (a, &q) in dist.iter().enumerate() {
                        if q > S::zero() {
                            next.push((u * na + a, p * q));
                        }
                    }
                }
            }
        }
        out = next;
    }
    out
}

/// Behavioral policy of one agent as a map from private histories to action distributions.
///
/// Reduced pure trees only hold histories reachable under their own actions;
/// grafted continuation trees hold histories extending a set of anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTree<S> {
    pub agent: usize,
    pub horizon: usize,
    pub n_actions: usize,
    pub nodes: BTreeMap<PrivateHistory, Vec<S>>,
}

#[derive(Serialize)]
struct NodeRecord {
    history: String,
    actions: BTreeMap<String, f64>,
}

#[derive(Serialize)]
struct TreeRecord {
    agent: usize,
    horizon: usize,
    nodes: Vec<NodeRecord>,
}

impl<S: Scalar> PolicyTree<S> {
    pub fn new(agent: usize, horizon: usize, n_actions: usize) -> Self {
        PolicyTree { agent, horizon, n_actions, nodes: BTreeMap::new() }
    }

    pub fn decision_at(&self, h: &PrivateHistory) -> Result<&[S]> {
        if h.len() >= self.horizon {
            return Err(Error::InvalidArgument(format!(
                "history of length {} at horizon {}",
                h.len(),
                self.horizon
            )));
        }
        self.nodes
            .get(h)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::UnreachableHistory(h.to_string()))
    }

    pub fn set(&mut self, h: PrivateHistory, dist: Vec<S>) {
        self.nodes.insert(h, dist);
    }

    pub fn set_pure(&mut self, h: PrivateHistory, action: usize) {
        let mut d = vec![S::zero(); self.n_actions];
        d[action] = S::one();
        self.nodes.insert(h, d);
    }

    pub fn is_deterministic(&self) -> bool {
        self.nodes
            .values()
            .all(|d| d.iter().filter(|p| **p > S::zero()).count() == 1)
    }

    /// Decision rule at step `t` restricted to `histories`.
    pub fn decision_rule<'a>(&self, t: usize, histories: impl IntoIterator<Item = &'a PrivateHistory>) -> Result<DecisionRule<S>> {
        let mut map = BTreeMap::new();
        for h in histories {
            let d = self.nodes.get(h).ok_or_else(|| Error::UndefinedDecisionRule {
                agent: self.agent,
                history: h.to_string(),
            })?;
            map.insert(h.clone(), d.clone());
        }
        Ok(DecisionRule { agent: self.agent, t, map })
    }

    /// Every decision rule stored at step `t`.
    pub fn rule_at(&self, t: usize) -> DecisionRule<S> {
        DecisionRule {
            agent: self.agent,
            t,
            map: self
                .nodes
                .iter()
                .filter(|(h, _)| h.len() == t)
                .map(|(h, d)| (h.clone(), d.clone()))
                .collect(),
        }
    }

    /// Deterministic JSON rendering, nodes in history order.
    pub fn to_json(&self, model: &PosgModel<S>) -> String {
        let record = TreeRecord {
            agent: self.agent + 1,
            horizon: self.horizon,
            nodes: self
                .nodes
                .iter()
                .map(|(h, d)| NodeRecord {
                    history: h.label(model, self.agent),
                    actions: d
                        .iter()
                        .enumerate()
                        .filter(|(_, p)| **p > S::zero())
                        .map(|(a, p)| (model.action_label(self.agent, a).to_string(), p.as_f64()))
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string(&record).expect("policy serializes")
    }
}

/// A policy tree per agent.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPolicy<S> {
    pub trees: Vec<PolicyTree<S>>,
}

impl<S: Scalar> JointPolicy<S> {
    pub fn new(trees: Vec<PolicyTree<S>>) -> Result<Self> {
        if let Some(first) = trees.first() {
            if trees.iter().any(|t| t.horizon != first.horizon) {
                return Err(Error::InvalidArgument("policy horizons differ".into()));
            }
        }
        Ok(JointPolicy { trees })
    }

    pub fn horizon(&self) -> usize {
        self.trees.first().map_or(0, |t| t.horizon)
    }

    /// Joint decision rule at step `t` over the given per-agent histories.
    pub fn decision_rule(&self, t: usize, histories: &[Vec<PrivateHistory>]) -> Result<JointDecisionRule<S>> {
        Ok(JointDecisionRule {
            rules: self
                .trees
                .iter()
                .zip(histories)
                .map(|(tree, hs)| tree.decision_rule(t, hs.iter()))
                .collect::<Result<Vec<_>>>()?,
        })
    }

    pub fn others(&self, excluded: usize) -> OthersPolicy<S> {
        OthersPolicy {
            excluded,
            trees: self
                .trees
                .iter()
                .enumerate()
                .map(|(j, t)| (j != excluded).then(|| t.clone()))
                .collect(),
        }
    }
}

/// Fixed policies of every agent but `excluded`.
#[derive(Debug, Clone, PartialEq)]
pub struct OthersPolicy<S> {
    pub excluded: usize,
    pub trees: Vec<Option<PolicyTree<S>>>,
}

impl<S: Scalar> OthersPolicy<S> {
    pub fn new(excluded: usize, trees: Vec<Option<PolicyTree<S>>>) -> Self {
        OthersPolicy { excluded, trees }
    }

    /// Others' decision rule at step `t` over the given per-agent histories.
    pub fn decision_rule(&self, t: usize, histories: &[Vec<PrivateHistory>]) -> Result<OthersDecisionRule<S>> {
        let rules = self
            .trees
            .iter()
            .enumerate()
            .map(|(j, tree)| {
                if j == self.excluded {
                    return Ok(None);
                }
                let tree = tree.as_ref().ok_or_else(|| Error::InvalidArgument(format!("no policy for agent {}", j + 1)))?;
                tree.decision_rule(t, histories[j].iter()).map(Some)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OthersDecisionRule { excluded: self.excluded, rules })
    }

    /// Joins with agent `excluded`'s tree into a joint policy.
    pub fn with(&self, own: PolicyTree<S>) -> JointPolicy<S> {
        JointPolicy {
            trees: self
                .trees
                .iter()
                .enumerate()
                .map(|(j, t)| {
                    if j == self.excluded {
                        own.clone()
                    } else {
                        t.clone().expect("others' policy defined")
                    }
                })
                .collect(),
        }
    }
}

/// Reduced deterministic policy trees of one agent, indexed level by level.
///
/// A tree of depth `d` has a root action and one depth `d-1` subtree per
/// observation. Indices are mixed radix with the root most significant and
/// subtrees in observation order, so the ordering is lexicographic in the
/// preorder sequence of actions.
#[derive(Debug, Clone)]
pub struct PureTreeSet {
    pub n_actions: usize,
    pub n_obs: usize,
    counts: Vec<u128>,
}

impl PureTreeSet {
    pub fn new(n_actions: usize, n_obs: usize, horizon: usize) -> Self {
        let mut counts = vec![1u128];
        for d in 1..=horizon {
            let sub = saturating_pow(counts[d - 1], n_obs);
            counts.push(sub.saturating_mul(n_actions as u128));
        }
        PureTreeSet { n_actions, n_obs, counts }
    }

    pub fn for_agent<S: Scalar>(model: &PosgModel<S>, agent: usize, horizon: usize) -> Self {
        Self::new(model.n_actions(agent), model.n_agent_obs(agent), horizon)
    }

    /// Number of trees of depth `d`, saturating at `u128::MAX`.
    pub fn count(&self, d: usize) -> u128 {
        self.counts[d]
    }

    fn subtree_block(&self, d: usize) -> usize {
        saturating_pow(self.counts[d - 1], self.n_obs) as usize
    }

    pub fn root(&self, d: usize, idx: usize) -> usize {
        idx / self.subtree_block(d)
    }

    pub fn child(&self, d: usize, idx: usize, z: usize) -> usize {
        let rem = idx % self.subtree_block(d);
        let base = self.counts[d - 1] as usize;
        let shift = saturating_pow(self.counts[d - 1], self.n_obs - 1 - z) as usize;
        (rem / shift) % base
    }

    /// Writes tree `idx` of depth `d` into `tree`, rooted at history `base`.
    pub fn graft<S: Scalar>(&self, d: usize, idx: usize, base: &PrivateHistory, tree: &mut PolicyTree<S>) {
        if d == 0 {
            return;
        }
        let a = self.root(d, idx);
        tree.set_pure(base.clone(), a);
        for z in 0..self.n_obs {
            self.graft(d - 1, self.child(d, idx, z), &base.extended(a, z), tree);
        }
    }

    pub fn tree<S: Scalar>(&self, agent: usize, d: usize, idx: usize) -> PolicyTree<S> {
        let mut t = PolicyTree::new(agent, d, self.n_actions);
        self.graft(d, idx, &PrivateHistory::empty(), &mut t);
        t
    }
}

fn saturating_pow(base: u128, exp: usize) -> u128 {
    let mut acc = 1u128;
    for _ in 0..exp {
        acc = acc.saturating_mul(base);
    }
    acc
}

/// Closed-form number of reduced pure trees: `|U|^((|Z|^h − 1)/(|Z| − 1))`.
pub fn pure_policy_count(n_actions: usize, n_obs: usize, horizon: usize) -> u128 {
    let nodes: u128 = if n_obs == 1 {
        horizon as u128
    } else {
        (saturating_pow(n_obs as u128, horizon) - 1) / (n_obs as u128 - 1)
    };
    let mut acc = 1u128;
    for _ in 0..nodes {
        acc = acc.saturating_mul(n_actions as u128);
        if acc == u128::MAX {
            break;
        }
    }
    acc
}

fn count_label(c: u128) -> String {
    if c == u128::MAX {
        "more than 3.4e38".to_string()
    } else {
        c.to_string()
    }
}

/// All reduced deterministic trees of `agent` for `horizon`, in index order.
pub fn enumerate_pure_policies<S: Scalar>(
    model: &PosgModel<S>,
    agent: usize,
    horizon: usize,
    cap: u128,
) -> Result<Vec<PolicyTree<S>>> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let count = pure_policy_count(model.n_actions(agent), model.n_agent_obs(agent), horizon);
    if count > cap {
        return Err(Error::EnumerationTooLarge { count: count_label(count), cap });
    }
    let set = PureTreeSet::for_agent(model, agent, horizon);
    Ok((0..count as usize).map(|k| set.tree(agent, horizon, k)).collect())
}

pub(crate) fn check_cap(count: u128, cap: u128) -> Result<usize> {
    if count > cap {
        Err(Error::EnumerationTooLarge { count: count_label(count), cap })
    } else {
        Ok(count as usize)
    }
}

/// Agent `agent`'s private history as seen by a planner, without the initial
/// belief and the others' policy.
#[derive(Debug, Clone)]
pub struct PrivatePlanTimeHistory<S> {
    pub start: Vec<S>,
    pub history: PrivateHistory,
    pub others: OthersPolicy<S>,
}

pub fn project_plan_time<S: Scalar>(y: &PrivatePlanTimeHistory<S>) -> PrivateHistory {
    y.history.clone()
}

/// All private histories of `agent` of length `t`, in lexicographic order.
pub fn all_histories<S: Scalar>(model: &PosgModel<S>, agent: usize, t: usize) -> Vec<PrivateHistory> {
    let mut out = vec![PrivateHistory::empty()];
    for _ in 0..t {
        let mut next = Vec::new();
        for h in &out {
            for u in 0..model.n_actions(agent) {
                for z in 0..model.n_agent_obs(agent) {
                    next.push(h.extended(u, z));
                }
            }
        }
        out = next;
    }
    out
}

/// Random distribution over `n` outcomes.
pub fn random_distribution<S: Scalar, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<S> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| S::lit(v / total)).collect()
}

/// Random behavioral policy defined on every private history shorter than `horizon`.
pub fn random_policy<S: Scalar, R: Rng + ?Sized>(
    model: &PosgModel<S>,
    agent: usize,
    horizon: usize,
    rng: &mut R,
) -> PolicyTree<S> {
    let mut tree = PolicyTree::new(agent, horizon, model.n_actions(agent));
    for t in 0..horizon {
        for h in all_histories(model, agent, t) {
            let d = random_distribution(rng, model.n_actions(agent));
            tree.set(h, d);
        }
    }
    tree
}

/// Random reduced pure tree of depth `horizon`.
pub fn random_pure_policy<S: Scalar, R: Rng + ?Sized>(
    model: &PosgModel<S>,
    agent: usize,
    horizon: usize,
    rng: &mut R,
) -> PolicyTree<S> {
    let mut tree = PolicyTree::new(agent, horizon, model.n_actions(agent));
    let mut frontier = vec![PrivateHistory::empty()];
    for _ in 0..horizon {
        let mut next = Vec::new();
        for h in frontier {
            let a = rng.random_range(0..model.n_actions(agent));
            for z in 0..model.n_agent_obs(agent) {
                next.push(h.extended(a, z));
            }
            tree.set_pure(h, a);
        }
        frontier = next;
    }
    tree
}

pub fn random_joint_policy<S: Scalar, R: Rng + ?Sized>(model: &PosgModel<S>, horizon: usize, rng: &mut R) -> JointPolicy<S> {
    JointPolicy {
        trees: (0..model.n_agents()).map(|i| random_policy(model, i, horizon, rng)).collect(),
    }
}

/// Tree playing action `action` at every history.
pub fn constant_policy<S: Scalar>(model: &PosgModel<S>, agent: usize, horizon: usize, action: usize) -> PolicyTree<S> {
    let mut tree = PolicyTree::new(agent, horizon, model.n_actions(agent));
    for t in 0..horizon {
        for h in all_histories(model, agent, t) {
            tree.set_pure(h, action);
        }
    }
    tree
}
