//! Trajectory-level oracle that works from the raw model tables only.
//!
//! Every path `(x_0, u_0, x_1, z_1, ..., x_t)` is enumerated explicitly with
//! its probability, without going through occupancy states.

use std::collections::BTreeMap;

use crate::model::PosgModel;
use crate::occupancy::{Key, OccupancyState};
use crate::policies::{JointHistory, PrivateHistory};

#[derive(Debug, Clone)]
pub struct Path {
    pub x: usize,
    pub histories: Vec<Vec<(usize, usize)>>,
    pub prob: f64,
}

/// Per-agent action distribution given that agent's own history.
pub type Chooser<'a> = dyn Fn(usize, &[(usize, usize)]) -> Vec<f64> + Sync + 'a;

fn decode(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut out = vec![0; radices.len()];
    for k in (0..radices.len()).rev() {
        out[k] = index % radices[k];
        index /= radices[k];
    }
    out
}

fn action_radices(model: &PosgModel<f64>) -> Vec<usize> {
    (0..model.n_agents()).map(|i| model.n_actions(i)).collect()
}

fn obs_radices(model: &PosgModel<f64>) -> Vec<usize> {
    std::iter::once(model.n_public_obs())
        .chain((0..model.n_agents()).map(|i| model.n_private_obs(i)))
        .collect()
}

/// Paths at step 0 drawn from `start`.
pub fn initial(model: &PosgModel<f64>, start: &[f64]) -> Vec<Path> {
    start
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(x, &p)| Path { x, histories: vec![Vec::new(); model.n_agents()], prob: p })
        .collect()
}

/// Extends every path by one step.
///
/// `keep(w, agent_obs)` filters the joint observation; the returned paths
/// carry unnormalized probabilities.
pub fn extend(
    model: &PosgModel<f64>,
    paths: &[Path],
    choose: &Chooser<'_>,
    keep: &dyn Fn(usize, &[usize]) -> bool,
) -> Vec<Path> {
    let n = model.n_agents();
    let ar = action_radices(model);
    let or = obs_radices(model);
    let nu: usize = ar.iter().product();
    let nz: usize = or.iter().product();
    let mut out = Vec::new();
    for path in paths {
        let dists: Vec<Vec<f64>> = (0..n).map(|i| choose(i, &path.histories[i])).collect();
        for u in 0..nu {
            let actions = decode(u, &ar);
            let pu: f64 = actions.iter().enumerate().map(|(i, &a)| dists[i][a]).product();
            if pu == 0.0 {
                continue;
            }
            for x2 in 0..model.n_states() {
                let pt = model.transition(u, path.x, x2);
                if pt == 0.0 {
                    continue;
                }
                for z in 0..nz {
                    let po = model.observation(u, x2, z);
                    if po == 0.0 {
                        continue;
                    }
                    let digits = decode(z, &or);
                    let w = digits[0];
                    let obs: Vec<usize> = (0..n).map(|i| w * model.n_private_obs(i) + digits[i + 1]).collect();
                    if !keep(w, &obs) {
                        continue;
                    }
                    let mut histories = path.histories.clone();
                    for i in 0..n {
                        histories[i].push((actions[i], obs[i]));
                    }
                    out.push(Path { x: x2, histories, prob: path.prob * pu * pt * po });
                }
            }
        }
    }
    out
}

pub fn mass(paths: &[Path]) -> f64 {
    paths.iter().map(|p| p.prob).sum()
}

/// Normalized distribution over `(state, joint history)` induced by `paths`.
pub fn occupancy(paths: &[Path]) -> OccupancyState<f64> {
    let total = mass(paths);
    let t = paths.first().map_or(0, |p| p.histories.first().map_or(0, Vec::len));
    let mut entries: BTreeMap<Key, f64> = BTreeMap::new();
    for p in paths {
        let o = JointHistory(p.histories.iter().map(|h| PrivateHistory(h.clone())).collect());
        *entries.entry((p.x, o)).or_insert(0.0) += p.prob / total;
    }
    OccupancyState { t, entries }
}

/// Expected immediate reward of `agent` over normalized `paths`.
pub fn reward(model: &PosgModel<f64>, paths: &[Path], choose: &Chooser<'_>, agent: usize) -> f64 {
    let ar = action_radices(model);
    let nu: usize = ar.iter().product();
    let total = mass(paths);
    let mut acc = 0.0;
    for path in paths {
        let dists: Vec<Vec<f64>> = (0..model.n_agents()).map(|i| choose(i, &path.histories[i])).collect();
        for u in 0..nu {
            let actions = decode(u, &ar);
            let pu: f64 = actions.iter().enumerate().map(|(i, &a)| dists[i][a]).product();
            acc += path.prob / total * pu * model.reward(agent, path.x, u);
        }
    }
    acc
}
