use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::PosgModel;
use crate::occupancy::OccupancyState;
use crate::policies::{check_cap, PolicyTree, PrivateHistory, PureTreeSet};
use crate::scalar::Scalar;
use crate::solve::matrix::MatrixGame;

/// Enumeration limits for exhaustive solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    /// Largest number of pure continuations per agent.
    pub per_agent: u128,
    /// Largest number of joint pure continuations.
    pub joint: u128,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { per_agent: 10_000, joint: 1_000_000 }
    }
}

/// Normal form induced at an occupancy state by pure continuation policies.
///
/// Each agent assigns one reduced pure tree of the remaining depth to every
/// private history in the support. Assignment indices are mixed radix over
/// the sorted support histories, first history most significant.
pub struct ContinuationGame<'a, S> {
    model: &'a PosgModel<S>,
    pub t: usize,
    pub depth: usize,
    sets: Vec<PureTreeSet>,
    trees_per_agent: Vec<usize>,
    pub anchors: Vec<Vec<PrivateHistory>>,
    pub n_assignments: Vec<usize>,
    entries: Vec<(Vec<usize>, usize, S)>,
    top: Vec<S>,
}

fn tuple_index(digits: &[usize], radices: &[usize]) -> usize {
    digits.iter().zip(radices).fold(0, |acc, (&d, &r)| acc * r + d)
}

fn decode(mut idx: usize, radix: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for k in (0..len).rev() {
        out[k] = idx % radix;
        idx /= radix;
    }
    out
}

impl<'a, S: Scalar> ContinuationGame<'a, S> {
    pub fn new(model: &'a PosgModel<S>, s: &OccupancyState<S>, caps: Caps) -> Result<Self> {
        if s.t > model.horizon() {
            return Err(Error::InvalidArgument(format!("occupancy state at t = {} past the horizon", s.t)));
        }
        let n = model.n_agents();
        let depth = model.horizon() - s.t;
        let sets: Vec<PureTreeSet> = (0..n).map(|i| PureTreeSet::for_agent(model, i, depth)).collect();
        let anchors = s.all_histories(n);
        let mut trees_per_agent = Vec::with_capacity(n);
        let mut n_assignments = Vec::with_capacity(n);
        let mut joint: u128 = 1;
        for i in 0..n {
            let per_tree = sets[i].count(depth);
            let mut count: u128 = 1;
            for _ in &anchors[i] {
                count = count.saturating_mul(per_tree);
            }
            n_assignments.push(check_cap(count, caps.per_agent)?);
            trees_per_agent.push(per_tree as usize);
            joint = joint.saturating_mul(count);
        }
        check_cap(joint, caps.joint)?;
        let entries = s
            .entries
            .iter()
            .map(|((x, o), &p)| {
                let idx = (0..n)
                    .map(|i| anchors[i].binary_search(o.agent(i)).expect("support history"))
                    .collect();
                (idx, *x, p)
            })
            .collect();
        let mut game = ContinuationGame {
            model,
            t: s.t,
            depth,
            sets,
            trees_per_agent,
            anchors,
            n_assignments,
            entries,
            top: Vec::new(),
        };
        game.top = game.tree_values();
        Ok(game)
    }

    /// Values of every tuple of depth-`depth` trees from every state, bottom-up.
    fn tree_values(&self) -> Vec<S> {
        let model = self.model;
        let n = model.n_agents();
        let nx = model.n_states();
        let gamma = model.discount();
        let mut prev: Vec<S> = vec![S::zero(); nx * n];
        let mut prev_radices: Vec<usize> = vec![1; n];
        for d in 1..=self.depth {
            let radices: Vec<usize> = self.sets.iter().map(|s| s.count(d) as usize).collect();
            let tuples: usize = radices.iter().product();
            let mut level = vec![S::zero(); tuples * nx * n];
            level.par_chunks_mut(nx * n).enumerate().for_each(|(tuple, out)| {
                let mut rem = tuple;
                let mut trees = vec![0; n];
                for i in (0..n).rev() {
                    trees[i] = rem % radices[i];
                    rem /= radices[i];
                }
                let roots: Vec<usize> = (0..n).map(|i| self.sets[i].root(d, trees[i])).collect();
                let u = model.joint_action(&roots);
                for x in 0..nx {
                    for i in 0..n {
                        out[x * n + i] = model.reward(i, x, u);
                    }
                    if d == 1 {
                        continue;
                    }
                    for &(x2, z, p) in model.dynamics(x, u) {
                        let children: Vec<usize> = (0..n)
                            .map(|i| self.sets[i].child(d, trees[i], model.agent_obs(z, i)))
                            .collect();
                        let c = tuple_index(&children, &prev_radices);
                        for i in 0..n {
                            out[x * n + i] += gamma * p * prev[(c * nx + x2) * n + i];
                        }
                    }
                }
            });
            prev = level;
            prev_radices = radices;
        }
        prev
    }

    /// Tree index per support history of `agent` for assignment `idx`.
    pub fn assignment(&self, agent: usize, idx: usize) -> Vec<usize> {
        decode(idx, self.trees_per_agent[agent], self.anchors[agent].len())
    }

    /// Expected payoff of every agent under a joint assignment.
    pub fn payoffs(&self, assignments: &[Vec<usize>]) -> Vec<S> {
        let n = self.model.n_agents();
        let nx = self.model.n_states();
        let mut out = vec![S::zero(); n];
        let mut trees = vec![0; n];
        for (idx, x, p) in &self.entries {
            for i in 0..n {
                trees[i] = assignments[i][idx[i]];
            }
            let c = tuple_index(&trees, &self.trees_per_agent);
            for i in 0..n {
                out[i] += *p * self.top[(c * nx + x) * n + i];
            }
        }
        out
    }

    /// Payoff matrices of both agents of a two-agent game (rows: agent 1).
    pub fn bimatrix(&self) -> Result<(MatrixGame<S>, MatrixGame<S>)> {
        if self.model.n_agents() != 2 {
            return Err(Error::InvalidArgument("bimatrix needs exactly two agents".into()));
        }
        let (rows, cols) = (self.n_assignments[0], self.n_assignments[1]);
        let col_assign: Vec<Vec<usize>> = (0..cols).map(|k| self.assignment(1, k)).collect();
        let cells: Vec<(S, S)> = (0..rows)
            .into_par_iter()
            .flat_map_iter(|j| {
                let a = self.assignment(0, j);
                col_assign
                    .iter()
                    .map(|b| {
                        let v = self.payoffs(&[a.clone(), b.clone()]);
                        (v[0], v[1])
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
        let first = MatrixGame::new(rows, cols, cells.iter().map(|c| c.0).collect())?;
        let second = MatrixGame::new(rows, cols, cells.iter().map(|c| c.1).collect())?;
        Ok((first, second))
    }

    pub fn joint_assignments(&self) -> usize {
        self.n_assignments.iter().product()
    }

    /// Splits a joint assignment index, agent 0 most significant.
    pub fn split_joint(&self, mut idx: usize) -> Vec<usize> {
        let n = self.n_assignments.len();
        let mut out = vec![0; n];
        for i in (0..n).rev() {
            out[i] = idx % self.n_assignments[i];
            idx /= self.n_assignments[i];
        }
        out
    }

    /// Policy tree of `agent` grafting the assignment's trees onto its support histories.
    pub fn policy(&self, agent: usize, idx: usize) -> PolicyTree<S> {
        let mut tree = PolicyTree::new(agent, self.model.horizon(), self.model.n_actions(agent));
        for (anchor, k) in self.anchors[agent].iter().zip(self.assignment(agent, idx)) {
            self.sets[agent].graft(self.depth, k, anchor, &mut tree);
        }
        tree
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_is_most_significant_first() {
        assert_eq!(decode(5, 3, 2), vec![1, 2]);
        assert_eq!(tuple_index(&[1, 2], &[3, 3]), 5);
    }
}
