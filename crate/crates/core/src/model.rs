use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    ZeroSum,
    Common,
    Stackelberg,
    General,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Criterion::ZeroSum => "zerosum",
            Criterion::Common => "common",
            Criterion::Stackelberg => "stackelberg",
            Criterion::General => "general",
        };
        f.write_str(s)
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zerosum" => Ok(Criterion::ZeroSum),
            "common" => Ok(Criterion::Common),
            "stackelberg" => Ok(Criterion::Stackelberg),
            "general" => Ok(Criterion::General),
            other => Err(Error::InvalidArgument(format!("unknown criterion {other}"))),
        }
    }
}

/// Raw dense tables of a model prior to validation.
///
/// `transition` is indexed `[u][x][x']`, `observation` is indexed `[u][x'][z]`
/// over joint observations and `rewards` is indexed `[i][x][u]`.
/// Joint actions and joint observations use mixed-radix indices with agent 0
/// most significant; a joint observation is `(w, z̃^1, ..., z̃^n)` with the
/// public component `w` most significant.
#[derive(Debug, Clone)]
pub struct ModelTables<S> {
    pub states: Vec<String>,
    pub actions: Vec<Vec<String>>,
    pub private_obs: Vec<Vec<String>>,
    pub public_obs: Vec<String>,
    pub transition: Vec<S>,
    pub observation: Vec<S>,
    pub rewards: Vec<S>,
    pub discount: S,
    pub horizon: usize,
    pub start: Vec<S>,
    pub criterion: Option<Criterion>,
}

/// A validated finite-horizon partially observable stochastic game.
#[derive(Debug, Clone)]
pub struct PosgModel<S> {
    tables: ModelTables<S>,
    n_joint_actions: usize,
    n_joint_obs: usize,
    action_of: Vec<Vec<usize>>,
    agent_obs_of: Vec<Vec<usize>>,
    public_of: Vec<usize>,
    dynamics: Vec<Vec<(usize, usize, S)>>,
    reward_bound: S,
}

fn row_sum<S: Scalar>(row: &[S]) -> S {
    row.iter().copied().sum()
}

impl<S: Scalar> PosgModel<S> {
    pub fn from_tables(tables: ModelTables<S>) -> Result<Self> {
        let n = tables.actions.len();
        if n == 0 {
            return Err(Error::InvalidModel("at least one agent is required".into()));
        }
        if tables.private_obs.len() != n {
            return Err(Error::InvalidModel(format!(
                "{} observation lists for {n} agents",
                tables.private_obs.len()
            )));
        }
        if tables.states.is_empty() {
            return Err(Error::InvalidModel("at least one state is required".into()));
        }
        if tables.actions.iter().any(|a| a.is_empty())
            || tables.private_obs.iter().any(|o| o.is_empty())
        {
            return Err(Error::InvalidModel(
                "every agent needs at least one action and one observation".into(),
            ));
        }
        let public_obs = if tables.public_obs.is_empty() {
            vec!["none".to_string()]
        } else {
            tables.public_obs.clone()
        };
        let tables = ModelTables { public_obs, ..tables };
        if tables.horizon == 0 {
            return Err(Error::InvalidModel("horizon must be at least 1".into()));
        }
        if !(tables.discount >= S::zero() && tables.discount <= S::one()) {
            return Err(Error::InvalidModel(format!(
                "discount {} outside [0, 1]",
                tables.discount
            )));
        }
        let nx = tables.states.len();
        let n_joint_actions: usize = tables.actions.iter().map(Vec::len).product();
        let n_joint_obs: usize =
            tables.public_obs.len() * tables.private_obs.iter().map(Vec::len).product::<usize>();
        let expect = |name: &str, got: usize, want: usize| -> Result<()> {
            if got == want {
                Ok(())
            } else {
                Err(Error::InvalidModel(format!("{name} table has {got} entries, expected {want}")))
            }
        };
        expect("transition", tables.transition.len(), n_joint_actions * nx * nx)?;
        expect("observation", tables.observation.len(), n_joint_actions * nx * n_joint_obs)?;
        expect("reward", tables.rewards.len(), n * nx * n_joint_actions)?;
        expect("start", tables.start.len(), nx)?;

        let action_of = (0..n_joint_actions)
            .map(|u| split_radix(u, tables.actions.iter().map(Vec::len)))
            .collect::<Vec<_>>();
        let mut agent_obs_of = Vec::with_capacity(n_joint_obs);
        let mut public_of = Vec::with_capacity(n_joint_obs);
        let radices: Vec<usize> = std::iter::once(tables.public_obs.len())
            .chain(tables.private_obs.iter().map(Vec::len))
            .collect();
        for z in 0..n_joint_obs {
            let digits = split_radix(z, radices.iter().copied());
            let w = digits[0];
            public_of.push(w);
            agent_obs_of.push(
                (0..n)
                    .map(|i| w * tables.private_obs[i].len() + digits[i + 1])
                    .collect(),
            );
        }

        let tol = S::tolerance();
        let mut reward_bound = S::zero();
        for &r in &tables.rewards {
            if !r.is_finite() {
                return Err(Error::InvalidModel("reward entries must be finite".into()));
            }
            reward_bound = reward_bound.max(r.abs());
        }
        let mut model = PosgModel {
            tables,
            n_joint_actions,
            n_joint_obs,
            action_of,
            agent_obs_of,
            public_of,
            dynamics: Vec::new(),
            reward_bound,
        };
        for u in 0..n_joint_actions {
            for x in 0..nx {
                let base = (u * nx + x) * nx;
                let row = &model.tables.transition[base..base + nx];
                if row.iter().any(|p| !(*p >= S::zero())) {
                    return Err(Error::InvalidModel(format!(
                        "negative transition probability for action ({}) from state {}",
                        model.joint_action_label(u),
                        model.tables.states[x]
                    )));
                }
                let sum = row_sum(row);
                if (sum - S::one()).abs() > tol {
                    return Err(Error::RowSum {
                        table: "transition",
                        location: format!(
                            "action ({}) from state {}",
                            model.joint_action_label(u),
                            model.tables.states[x]
                        ),
                        sum: sum.as_f64(),
                    });
                }
                let base = (u * nx + x) * n_joint_obs;
                let row = &model.tables.observation[base..base + n_joint_obs];
                if row.iter().any(|p| !(*p >= S::zero())) {
                    return Err(Error::InvalidModel(format!(
                        "negative observation probability for action ({}) into state {}",
                        model.joint_action_label(u),
                        model.tables.states[x]
                    )));
                }
                let sum = row_sum(row);
                if (sum - S::one()).abs() > tol {
                    return Err(Error::RowSum {
                        table: "observation",
                        location: format!(
                            "action ({}) into state {}",
                            model.joint_action_label(u),
                            model.tables.states[x]
                        ),
                        sum: sum.as_f64(),
                    });
                }
            }
        }
        if model.tables.start.iter().any(|p| !(*p >= S::zero())) {
            return Err(Error::InvalidModel("start belief has a negative entry".into()));
        }
        let sum = row_sum(&model.tables.start);
        if (sum - S::one()).abs() > tol {
            return Err(Error::RowSum {
                table: "start",
                location: "initial belief".into(),
                sum: sum.as_f64(),
            });
        }
        model.dynamics = model.build_dynamics();
        if let Some(c) = model.tables.criterion {
            model.check_declared(c)?;
        }
        Ok(model)
    }

    fn build_dynamics(&self) -> Vec<Vec<(usize, usize, S)>> {
        let nx = self.n_states();
        let mut out = Vec::with_capacity(nx * self.n_joint_actions);
        for x in 0..nx {
            for u in 0..self.n_joint_actions {
                let mut list = Vec::new();
                for x2 in 0..nx {
                    let p = self.transition(u, x, x2);
                    if p <= S::zero() {
                        continue;
                    }
                    for z in 0..self.n_joint_obs {
                        let q = self.observation(u, x2, z);
                        if q > S::zero() {
                            list.push((x2, z, p * q));
                        }
                    }
                }
                out.push(list);
            }
        }
        out
    }

    pub fn tables(&self) -> &ModelTables<S> {
        &self.tables
    }

    pub fn n_agents(&self) -> usize {
        self.tables.actions.len()
    }

    pub fn n_states(&self) -> usize {
        self.tables.states.len()
    }

    pub fn n_actions(&self, agent: usize) -> usize {
        self.tables.actions[agent].len()
    }

    pub fn n_private_obs(&self, agent: usize) -> usize {
        self.tables.private_obs[agent].len()
    }

    pub fn n_public_obs(&self) -> usize {
        self.tables.public_obs.len()
    }

    /// Size of agent `agent`'s full observation space, public part included.
    pub fn n_agent_obs(&self, agent: usize) -> usize {
        self.n_public_obs() * self.n_private_obs(agent)
    }

    pub fn n_joint_actions(&self) -> usize {
        self.n_joint_actions
    }

    pub fn n_joint_obs(&self) -> usize {
        self.n_joint_obs
    }

    pub fn discount(&self) -> S {
        self.tables.discount
    }

    pub fn horizon(&self) -> usize {
        self.tables.horizon
    }

    pub fn start(&self) -> &[S] {
        &self.tables.start
    }

    pub fn declared_criterion(&self) -> Option<Criterion> {
        self.tables.criterion
    }

    /// Largest absolute reward over all agents, states and joint actions.
    pub fn reward_bound(&self) -> S {
        self.reward_bound
    }

    pub fn transition(&self, u: usize, x: usize, x2: usize) -> S {
        let nx = self.n_states();
        self.tables.transition[(u * nx + x) * nx + x2]
    }

    pub fn observation(&self, u: usize, x2: usize, z: usize) -> S {
        let nx = self.n_states();
        self.tables.observation[(u * nx + x2) * self.n_joint_obs + z]
    }

    pub fn reward(&self, agent: usize, x: usize, u: usize) -> S {
        let nx = self.n_states();
        self.tables.rewards[(agent * nx + x) * self.n_joint_actions + u]
    }

    /// Positive-probability successors `(x', z, p^{u,z}_{x,x'})` of `(x, u)`.
    pub fn dynamics(&self, x: usize, u: usize) -> &[(usize, usize, S)] {
        &self.dynamics[x * self.n_joint_actions + u]
    }

    pub fn joint_action(&self, actions: &[usize]) -> usize {
        actions
            .iter()
            .zip(&self.tables.actions)
            .fold(0, |acc, (&a, labels)| acc * labels.len() + a)
    }

    pub fn joint_obs(&self, public: usize, private: &[usize]) -> usize {
        private
            .iter()
            .zip(&self.tables.private_obs)
            .fold(public, |acc, (&z, labels)| acc * labels.len() + z)
    }

    pub fn action_of(&self, u: usize, agent: usize) -> usize {
        self.action_of[u][agent]
    }

    pub fn actions_of(&self, u: usize) -> &[usize] {
        &self.action_of[u]
    }

    /// Agent `agent`'s observation index `w·|Z̃^i| + z̃^i` inside joint observation `z`.
    pub fn agent_obs(&self, z: usize, agent: usize) -> usize {
        self.agent_obs_of[z][agent]
    }

    pub fn agent_obs_all(&self, z: usize) -> &[usize] {
        &self.agent_obs_of[z]
    }

    pub fn public_of(&self, z: usize) -> usize {
        self.public_of[z]
    }

    /// Public component of an agent observation index.
    pub fn public_of_agent_obs(&self, agent: usize, o: usize) -> usize {
        o / self.n_private_obs(agent)
    }

    pub fn state_label(&self, x: usize) -> &str {
        &self.tables.states[x]
    }

    pub fn action_label(&self, agent: usize, a: usize) -> &str {
        &self.tables.actions[agent][a]
    }

    pub fn public_label(&self, w: usize) -> &str {
        &self.tables.public_obs[w]
    }

    pub fn agent_obs_label(&self, agent: usize, o: usize) -> String {
        let k = self.n_private_obs(agent);
        let private = &self.tables.private_obs[agent][o % k];
        if self.n_public_obs() == 1 {
            private.clone()
        } else {
            format!("{}+{}", self.tables.public_obs[o / k], private)
        }
    }

    pub fn joint_action_label(&self, u: usize) -> String {
        self.action_of[u]
            .iter()
            .enumerate()
            .map(|(i, &a)| self.tables.actions[i][a].as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn state_index(&self, label: &str) -> Option<usize> {
        self.tables.states.iter().position(|s| s == label)
    }

    pub fn action_index(&self, agent: usize, label: &str) -> Option<usize> {
        self.tables.actions[agent].iter().position(|s| s == label)
    }

    /// Agent observation index for a private label when there is a single public observation.
    pub fn agent_obs_index(&self, agent: usize, label: &str) -> Option<usize> {
        (0..self.n_agent_obs(agent)).find(|&o| self.agent_obs_label(agent, o) == label)
    }

    /// Joint distribution over `(x', z)` after taking `u` in `x`.
    pub fn joint_dynamics(&self, x: usize, u: usize) -> Result<Vec<(usize, usize, S)>> {
        if x >= self.n_states() {
            return Err(Error::InvalidArgument(format!("state index {x} out of range")));
        }
        if u >= self.n_joint_actions {
            return Err(Error::InvalidArgument(format!("joint action index {u} out of range")));
        }
        Ok(self.dynamics(x, u).to_vec())
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        let mut m = self.clone();
        m.tables.horizon = horizon;
        Ok(m)
    }

    pub fn with_start(&self, start: Vec<S>) -> Result<Self> {
        let mut tables = self.tables.clone();
        tables.start = start;
        Self::from_tables(tables)
    }

    /// Returns a copy whose reward tables are rewritten to match `criterion`:
    /// `common` copies agent 1's rewards to every agent and `zerosum` sets
    /// agent 2's rewards to the negation of agent 1's.
    pub fn with_criterion(&self, criterion: Criterion) -> Result<Self> {
        let mut tables = self.tables.clone();
        let n = self.n_agents();
        let block = self.n_states() * self.n_joint_actions;
        match criterion {
            Criterion::Common => {
                for i in 1..n {
                    for k in 0..block {
                        tables.rewards[i * block + k] = tables.rewards[k];
                    }
                }
            }
            Criterion::ZeroSum => {
                if n != 2 {
                    return Err(Error::InvalidArgument(
                        "zero-sum games need exactly two agents".into(),
                    ));
                }
                for k in 0..block {
                    tables.rewards[block + k] = -tables.rewards[k];
                }
            }
            Criterion::Stackelberg => {
                if n != 2 {
                    return Err(Error::InvalidArgument(
                        "Stackelberg games need exactly two agents".into(),
                    ));
                }
            }
            Criterion::General => {}
        }
        tables.criterion = Some(criterion);
        Self::from_tables(tables)
    }

    pub(crate) fn rewards_common(&self) -> bool {
        let tol = S::tolerance();
        let block = self.n_states() * self.n_joint_actions;
        (1..self.n_agents()).all(|i| {
            (0..block).all(|k| (self.tables.rewards[i * block + k] - self.tables.rewards[k]).abs() <= tol)
        })
    }

    pub(crate) fn rewards_zero_sum(&self) -> bool {
        let tol = S::tolerance();
        let block = self.n_states() * self.n_joint_actions;
        self.n_agents() == 2
            && (0..block)
                .all(|k| (self.tables.rewards[block + k] + self.tables.rewards[k]).abs() <= tol)
    }

    fn check_declared(&self, c: Criterion) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::CriterionMismatch {
                declared: c.to_string(),
                reason: reason.to_string(),
            })
        };
        match c {
            Criterion::ZeroSum if self.n_agents() != 2 => fail("zero-sum needs two agents"),
            Criterion::ZeroSum if !self.rewards_zero_sum() => fail("r^1 differs from -r^2"),
            Criterion::Common if !self.rewards_common() => fail("agents' rewards differ"),
            Criterion::Stackelberg if self.n_agents() != 2 => fail("Stackelberg needs two agents"),
            _ => Ok(()),
        }
    }

    /// Strictest criterion consistent with the reward tables.
    ///
    /// A declared criterion is returned when consistent. Without a declaration,
    /// `common` is preferred over `zerosum`, which is preferred over `general`.
    pub fn classify(&self) -> Result<Criterion> {
        if let Some(c) = self.tables.criterion {
            self.check_declared(c)?;
            return Ok(c);
        }
        if self.rewards_common() {
            Ok(Criterion::Common)
        } else if self.rewards_zero_sum() {
            Ok(Criterion::ZeroSum)
        } else {
            Ok(Criterion::General)
        }
    }

    /// Converts every table to another scalar type.
    pub fn cast<T: Scalar>(&self) -> PosgModel<T> {
        let conv = |v: &[S]| v.iter().map(|x| T::lit(x.as_f64())).collect::<Vec<T>>();
        let t = &self.tables;
        let tables = ModelTables {
            states: t.states.clone(),
            actions: t.actions.clone(),
            private_obs: t.private_obs.clone(),
            public_obs: t.public_obs.clone(),
            transition: conv(&t.transition),
            observation: conv(&t.observation),
            rewards: conv(&t.rewards),
            discount: T::lit(t.discount.as_f64()),
            horizon: t.horizon,
            start: conv(&t.start),
            criterion: t.criterion,
        };
        PosgModel::from_tables(tables).expect("casting a validated model keeps it valid")
    }
}

/// Splits `index` into mixed-radix digits, most significant first.
pub(crate) fn split_radix(mut index: usize, radices: impl DoubleEndedIterator<Item = usize>) -> Vec<usize> {
    let radices: Vec<usize> = radices.collect();
    let mut digits = vec![0; radices.len()];
    for k in (0..radices.len()).rev() {
        digits[k] = index % radices[k];
        index /= radices[k];
    }
    digits
}

/// Smallest horizon whose truncation error is below `epsilon`:
/// `⌈log_γ((1−γ)ε/c)⌉`, clamped below at 1.
pub fn horizon_for_epsilon(gamma: f64, c: f64, epsilon: f64) -> Result<usize> {
    if gamma == 1.0 {
        return Err(Error::UndiscountedHorizon);
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidArgument(format!("discount {gamma} outside [0, 1)")));
    }
    if !(c > 0.0) || !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(
            "reward bound and epsilon must be positive".into(),
        ));
    }
    if gamma == 0.0 {
        return Ok(1);
    }
    let exact = ((1.0 - gamma) * epsilon / c).ln() / gamma.ln();
    let ceil = (exact - 1e-9).ceil();
    Ok(if ceil < 1.0 { 1 } else { ceil as usize })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_formula_examples() {
        assert_eq!(horizon_for_epsilon(0.9, 2.0, 0.1).unwrap(), 51);
        assert_eq!(horizon_for_epsilon(0.5, 1.0, 1.0).unwrap(), 1);
        assert_eq!(horizon_for_epsilon(0.5, 1.0, 10.0).unwrap(), 1);
        assert!(matches!(
            horizon_for_epsilon(1.0, 1.0, 1.0),
            Err(Error::UndiscountedHorizon)
        ));
    }

    #[test]
    fn radix_split_round_trips() {
        assert_eq!(split_radix(5, [3, 2].into_iter()), vec![2, 1]);
        assert_eq!(split_radix(0, [1].into_iter()), vec![0]);
    }
}
