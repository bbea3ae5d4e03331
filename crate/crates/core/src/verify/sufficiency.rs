use rand::Rng;
use rayon::prelude::*;

use super::raw::{self, Chooser};
use super::{max_abs_diff, sample_index, uniform_joint_rule, Fault, PropertyReport, VerifyConfig};
use crate::error::Result;
use crate::model::PosgModel;
use crate::occupancy::{
    expected_reward, others_rule_at, policy_rule, private_branches, private_observation_probs, private_occupancy,
    private_reward, private_step, step, OccupancyState, PrivateOccupancyState,
};
use crate::policies::{constant_policy, random_joint_policy, random_policy, OthersPolicy, PolicyTree, PrivateHistory};

fn tree_chooser(trees: &[PolicyTree<f64>]) -> impl Fn(usize, &[(usize, usize)]) -> Vec<f64> + Sync + '_ {
    move |i, h| {
        trees[i]
            .decision_at(&PrivateHistory(h.to_vec()))
            .expect("random policies cover every history")
            .to_vec()
    }
}

fn one_hot(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

/// Discrepancy between raw and occupancy-based reward, public-observation and
/// successor predictions along one random plan-time history.
fn master_sample(model: &PosgModel<f64>, config: &VerifyConfig, k: usize) -> Result<f64> {
    let mut rng = config.rng(k);
    let h = model.horizon();
    let policy = random_joint_policy(model, h, &mut rng);
    let t = rng.random_range(0..h);
    let rule_at = |s: &OccupancyState<f64>| match config.fault {
        Fault::UniformJointRule { t } if t == s.t => Ok(uniform_joint_rule(model, s)),
        _ => policy_rule(model, &policy, s),
    };

    let mut s = OccupancyState::initial(model);
    let mut public = Vec::with_capacity(t);
    for _ in 0..t {
        let branches = step(model, &s, &rule_at(&s)?)?;
        let pick = sample_index(&mut rng, &branches.iter().map(|b| b.prob).collect::<Vec<_>>());
        let b = branches.into_iter().nth(pick).expect("branch");
        public.push(b.public);
        s = b.next;
    }

    let choose = tree_chooser(&policy.trees);
    let mut paths = raw::initial(model, model.start());
    for &w in &public {
        paths = raw::extend(model, &paths, &choose, &|v, _| v == w);
    }
    let mut worst = raw::occupancy(&paths).max_diff(&s);

    let a = rule_at(&s)?;
    for i in 0..model.n_agents() {
        let r = expected_reward(model, &s, &a, i)?;
        worst = worst.max((raw::reward(model, &paths, &choose, i) - r).abs());
    }
    let total = raw::mass(&paths);
    let branches = step(model, &s, &a)?;
    for w in 0..model.n_public_obs() {
        let next = raw::extend(model, &paths, &choose, &|v, _| v == w);
        let omega = raw::mass(&next) / total;
        match branches.iter().find(|b| b.public == w) {
            Some(b) => {
                worst = worst.max((omega - b.prob).abs());
                worst = worst.max(raw::occupancy(&next).max_diff(&b.next));
            }
            None => worst = worst.max(omega),
        }
    }
    Ok(worst)
}

/// Raw trajectory enumeration against the occupancy route for the reward,
/// the next public observation and the next occupancy state.
pub fn check_sufficiency_master(model: &PosgModel<f64>, fixture: &str, config: &VerifyConfig) -> Result<PropertyReport> {
    let violations = (0..config.samples)
        .into_par_iter()
        .map(|k| master_sample(model, config, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(PropertyReport::new(
        "sufficiency-master",
        fixture,
        config.samples,
        violations.into_iter().fold(0.0, f64::max),
        config.exact_tolerance,
        config.seed,
        "reward, public observation and successor occupancy vs raw trajectory enumeration",
    ))
}

fn uniform_others(model: &PosgModel<f64>, agent: usize) -> OthersPolicy<f64> {
    let h = model.horizon();
    let trees = (0..model.n_agents())
        .map(|j| {
            (j != agent).then(|| {
                let mut tree = constant_policy(model, j, h, 0);
                let n = model.n_actions(j);
                let keys: Vec<_> = tree.nodes.keys().cloned().collect();
                for hist in keys {
                    tree.set(hist, vec![1.0 / n as f64; n]);
                }
                tree
            })
        })
        .collect();
    OthersPolicy::new(agent, trees)
}

/// Random others' policy and a private history of `agent` reached under it.
fn private_history<R: Rng>(
    model: &PosgModel<f64>,
    agent: usize,
    others: &OthersPolicy<f64>,
    t: usize,
    rng: &mut R,
) -> Result<PrivateOccupancyState<f64>> {
    let mut s = PrivateOccupancyState::initial(model, model.start(), agent);
    for _ in 0..t {
        let rule = others_rule_at(model, others, &s)?;
        let u = rng.random_range(0..model.n_actions(agent));
        let branches = private_branches(model, &s, &rule, u)?;
        let pick = sample_index(rng, &branches.iter().map(|b| b.1).collect::<Vec<_>>());
        s = branches.into_iter().nth(pick).expect("branch").2;
    }
    Ok(s)
}

fn private_sample(model: &PosgModel<f64>, agent: usize, config: &VerifyConfig, k: usize) -> Result<f64> {
    let mut rng = config.rng(k);
    let h = model.horizon();
    let trees: Vec<PolicyTree<f64>> = (0..model.n_agents()).map(|j| random_policy(model, j, h, &mut rng)).collect();
    let truth = OthersPolicy::new(agent, trees.iter().cloned().map(Some).collect());
    let used = match config.fault {
        Fault::UniformOthersRule => uniform_others(model, agent),
        _ => truth.clone(),
    };
    let t = rng.random_range(0..h);
    let anchor = private_history(model, agent, &used, t, &mut rng)?.anchor;
    let s = private_occupancy(model, model.start(), &used, agent, &anchor)?;

    let steps = anchor.steps().to_vec();
    let na = model.n_actions(agent);
    let trees_ref = &trees;
    let along = move |i: usize, hist: &[(usize, usize)]| {
        if i == agent {
            one_hot(na, steps[hist.len()].0)
        } else {
            trees_ref[i].decision_at(&PrivateHistory(hist.to_vec())).expect("full tree").to_vec()
        }
    };
    let mut paths = raw::initial(model, model.start());
    for &(_, z) in anchor.steps() {
        paths = raw::extend(model, &paths, &along, &|_, obs| obs[agent] == z);
    }
    let mut worst = raw::occupancy(&paths).max_diff(&s.as_occupancy());

    let rule = others_rule_at(model, &used, &s)?;
    let total = raw::mass(&paths);
    for u in 0..na {
        let playing = move |i: usize, hist: &[(usize, usize)]| {
            if i == agent {
                one_hot(na, u)
            } else {
                trees_ref[i].decision_at(&PrivateHistory(hist.to_vec())).expect("full tree").to_vec()
            }
        };
        let chooser: &Chooser<'_> = &playing;
        let r = private_reward(model, &s, &rule, u)?;
        worst = worst.max((raw::reward(model, &paths, chooser, agent) - r).abs());
        let probs = private_observation_probs(model, &s, &rule, u)?;
        let mut raw_probs = Vec::with_capacity(probs.len());
        for z in 0..model.n_agent_obs(agent) {
            let next = raw::extend(model, &paths, chooser, &|_, obs| obs[agent] == z);
            let omega = raw::mass(&next) / total;
            raw_probs.push(omega);
            if omega > 0.0 && probs[z] > 0.0 {
                let (_, succ) = private_step(model, &s, &rule, u, z)?;
                worst = worst.max(raw::occupancy(&next).max_diff(&succ.as_occupancy()));
            }
        }
        worst = worst.max(max_abs_diff(&raw_probs, &probs));
    }
    Ok(worst)
}

/// Raw trajectory enumeration against the private-occupancy route for the
/// private occupancy state, the next private observation, the successor and
/// the immediate reward of each own action.
pub fn check_sufficiency_private(
    model: &PosgModel<f64>,
    fixture: &str,
    agent: usize,
    config: &VerifyConfig,
) -> Result<PropertyReport> {
    let violations = (0..config.samples)
        .into_par_iter()
        .map(|k| private_sample(model, agent, config, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(PropertyReport::new(
        &format!("sufficiency-private-agent{}", agent + 1),
        fixture,
        config.samples,
        violations.into_iter().fold(0.0, f64::max),
        config.exact_tolerance,
        config.seed,
        "private occupancy, private observation, successor and reward vs raw trajectory enumeration",
    ))
}

/// When `agent` observes everything the other agent sees, its private
/// occupancy state carries a single history of the other agent and its state
/// marginal is the raw posterior over states.
pub fn check_one_sided(model: &PosgModel<f64>, fixture: &str, agent: usize, config: &VerifyConfig) -> Result<PropertyReport> {
    let violations = (0..config.samples)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let mut rng = config.rng(k);
            let h = model.horizon();
            let trees: Vec<PolicyTree<f64>> =
                (0..model.n_agents()).map(|j| random_policy(model, j, h, &mut rng)).collect();
            let others = OthersPolicy::new(agent, trees.iter().cloned().map(Some).collect());
            let t = rng.random_range(0..=h);
            let s = private_history(model, agent, &others, t, &mut rng)?;
            let mut worst = 0.0f64;
            for j in (0..model.n_agents()).filter(|&j| j != agent) {
                worst = worst.max(s.as_occupancy().histories(j).len() as f64 - 1.0);
            }
            let steps = s.anchor.steps().to_vec();
            let na = model.n_actions(agent);
            let along = |i: usize, hist: &[(usize, usize)]| {
                if i == agent {
                    one_hot(na, steps[hist.len()].0)
                } else {
                    trees[i].decision_at(&PrivateHistory(hist.to_vec())).expect("full tree").to_vec()
                }
            };
            let mut paths = raw::initial(model, model.start());
            for &(_, z) in s.anchor.steps() {
                paths = raw::extend(model, &paths, &along, &|_, obs| obs[agent] == z);
            }
            let total = raw::mass(&paths);
            let mut belief = vec![0.0; model.n_states()];
            for p in &paths {
                belief[p.x] += p.prob / total;
            }
            let mut marginal = vec![0.0; model.n_states()];
            for ((x, _), p) in &s.entries {
                marginal[*x] += p;
            }
            Ok(worst.max(max_abs_diff(&belief, &marginal)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PropertyReport::new(
        &format!("one-sided-agent{}", agent + 1),
        fixture,
        config.samples,
        violations.into_iter().fold(0.0, f64::max),
        config.exact_tolerance,
        config.seed,
        "private occupancy state marginal vs raw state posterior",
    ))
}
