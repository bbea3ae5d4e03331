//! Best-response and exact normal-form solvers.

pub mod best_response;
pub mod lp;
pub mod matrix;
pub mod normal_form;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::format::sig10;
use crate::model::{Criterion, PosgModel};
use crate::occupancy::OccupancyState;
use crate::policies::PolicyTree;
use crate::scalar::Scalar;

pub use best_response::{
    best_response_history, best_response_history_from, best_response_private, best_response_private_from,
    private_value, BestResponse,
};
pub use lp::{solve_lp, LinearProgram, LpOutcome, LpSolution, Relation};
pub use matrix::{matrix_game_value, stackelberg_matrix, MatrixGame, MatrixSolution, StackelbergSolution};
pub use normal_form::{Caps, ContinuationGame};

/// Weight on one pure continuation assignment of one agent.
#[derive(Debug, Clone)]
pub struct MixtureEntry<S> {
    pub index: usize,
    pub weight: S,
    pub policy: PolicyTree<S>,
}

/// Solution of a master game at an occupancy state.
#[derive(Debug, Clone)]
pub struct Equilibrium<S> {
    pub criterion: Criterion,
    /// Value of every agent at the occupancy state.
    pub values: Vec<S>,
    /// Per agent, the support of its mixture over pure continuation assignments.
    pub mixtures: Vec<Vec<MixtureEntry<S>>>,
    pub method: String,
    pub iterations: usize,
    pub residual: S,
}

#[derive(Serialize)]
struct ReportMixture {
    index: usize,
    weight: String,
    policy: serde_json::Value,
}

#[derive(Serialize)]
struct Report {
    criterion: String,
    values: Vec<String>,
    mixtures: Vec<Vec<ReportMixture>>,
    method: String,
    iterations: usize,
    residual: String,
}

impl<S: Scalar> Equilibrium<S> {
    /// Agent 1's value, the quantity every criterion optimizes at its root.
    pub fn value(&self) -> S {
        self.values[0]
    }

    pub fn to_json(&self, model: &PosgModel<S>) -> String {
        let report = Report {
            criterion: self.criterion.to_string(),
            values: self.values.iter().map(|v| sig10(v.as_f64())).collect(),
            mixtures: self
                .mixtures
                .iter()
                .map(|m| {
                    m.iter()
                        .map(|e| ReportMixture {
                            index: e.index,
                            weight: sig10(e.weight.as_f64()),
                            policy: serde_json::from_str(&e.policy.to_json(model)).expect("valid json"),
                        })
                        .collect()
                })
                .collect(),
            method: self.method.clone(),
            iterations: self.iterations,
            residual: sig10(self.residual.as_f64()),
        };
        serde_json::to_string(&report).expect("report serializes")
    }
}

fn support<S: Scalar>(game: &ContinuationGame<'_, S>, agent: usize, mix: &[S]) -> Vec<MixtureEntry<S>> {
    mix.iter()
        .enumerate()
        .filter(|(_, w)| **w > S::prune_threshold())
        .map(|(index, &weight)| MixtureEntry { index, weight, policy: game.policy(agent, index) })
        .collect()
}

fn pure<S: Scalar>(game: &ContinuationGame<'_, S>, agent: usize, index: usize) -> Vec<MixtureEntry<S>> {
    vec![MixtureEntry { index, weight: S::one(), policy: game.policy(agent, index) }]
}

/// Optimal joint continuation of a common-payoff game at `s`.
///
/// Ties go to the lowest joint index (agent 1 most significant).
pub fn solve_dec_at<S: Scalar>(model: &PosgModel<S>, s: &OccupancyState<S>, caps: Caps) -> Result<Equilibrium<S>> {
    if !model.rewards_common() {
        return Err(Error::CriterionMismatch {
            declared: "common".into(),
            reason: "agents' rewards differ".into(),
        });
    }
    let game = ContinuationGame::new(model, s, caps)?;
    let total = game.joint_assignments();
    let values: Vec<S> = (0..total)
        .into_par_iter()
        .map(|k| {
            let split = game.split_joint(k);
            let assign: Vec<Vec<usize>> = split.iter().enumerate().map(|(i, &a)| game.assignment(i, a)).collect();
            game.payoffs(&assign)[0]
        })
        .collect();
    let tol = S::tolerance();
    let mut best = 0;
    for (k, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] + tol {
            best = k;
        }
    }
    let split = game.split_joint(best);
    Ok(Equilibrium {
        criterion: Criterion::Common,
        values: vec![values[best]; model.n_agents()],
        mixtures: split.iter().enumerate().map(|(i, &a)| pure(&game, i, a)).collect(),
        method: "exhaustive enumeration of pure joint continuations".into(),
        iterations: total,
        residual: S::zero(),
    })
}

/// Maxmin value of agent 1 in a two-agent zero-sum game at `s`.
pub fn solve_zero_sum_at<S: Scalar>(
    model: &PosgModel<S>,
    s: &OccupancyState<S>,
    caps: Caps,
    tolerance: S,
) -> Result<Equilibrium<S>> {
    if !model.rewards_zero_sum() {
        return Err(Error::CriterionMismatch {
            declared: "zerosum".into(),
            reason: "r^1 differs from -r^2 or the game does not have two agents".into(),
        });
    }
    let game = ContinuationGame::new(model, s, caps)?;
    let (a, _) = game.bimatrix()?;
    let sol = matrix_game_value(&a, tolerance)?;
    Ok(Equilibrium {
        criterion: Criterion::ZeroSum,
        values: vec![sol.value, -sol.value],
        mixtures: vec![support(&game, 0, &sol.row_mix), support(&game, 1, &sol.col_mix)],
        method: "induced normal form, simplex on both players' programs".into(),
        iterations: sol.pivots,
        residual: sol.residual,
    })
}

/// Strong Stackelberg equilibrium at `s` with agent 1 leading.
pub fn solve_stackelberg_at<S: Scalar>(
    model: &PosgModel<S>,
    s: &OccupancyState<S>,
    caps: Caps,
    tolerance: S,
) -> Result<Equilibrium<S>> {
    if model.n_agents() != 2 {
        return Err(Error::CriterionMismatch {
            declared: "stackelberg".into(),
            reason: "Stackelberg games need two agents".into(),
        });
    }
    let game = ContinuationGame::new(model, s, caps)?;
    let (leader, follower) = game.bimatrix()?;
    let sol = stackelberg_matrix(&leader, &follower, tolerance)?;
    Ok(Equilibrium {
        criterion: Criterion::Stackelberg,
        values: vec![sol.leader_value, sol.follower_value],
        mixtures: vec![support(&game, 0, &sol.leader_mix), pure(&game, 1, sol.follower_response)],
        method: "induced normal form, one program per follower response".into(),
        iterations: sol.pivots,
        residual: S::zero(),
    })
}

fn at_start<S: Scalar>(model: &PosgModel<S>, horizon: usize) -> Result<(PosgModel<S>, OccupancyState<S>)> {
    let m = model.with_horizon(horizon)?;
    let s = OccupancyState::initial(&m);
    Ok((m, s))
}

pub fn solve_dec<S: Scalar>(model: &PosgModel<S>, horizon: usize, caps: Caps) -> Result<Equilibrium<S>> {
    let (m, s) = at_start(model, horizon)?;
    solve_dec_at(&m, &s, caps)
}

pub fn solve_zero_sum<S: Scalar>(model: &PosgModel<S>, horizon: usize, caps: Caps, tolerance: S) -> Result<Equilibrium<S>> {
    let (m, s) = at_start(model, horizon)?;
    solve_zero_sum_at(&m, &s, caps, tolerance)
}

pub fn solve_stackelberg<S: Scalar>(
    model: &PosgModel<S>,
    horizon: usize,
    caps: Caps,
    tolerance: S,
) -> Result<Equilibrium<S>> {
    let (m, s) = at_start(model, horizon)?;
    solve_stackelberg_at(&m, &s, caps, tolerance)
}

/// Solves `model` at `s` under `criterion`.
pub fn solve_at<S: Scalar>(
    model: &PosgModel<S>,
    criterion: Criterion,
    s: &OccupancyState<S>,
    caps: Caps,
    tolerance: S,
) -> Result<Equilibrium<S>> {
    match criterion {
        Criterion::Common => solve_dec_at(model, s, caps),
        Criterion::ZeroSum => solve_zero_sum_at(model, s, caps, tolerance),
        Criterion::Stackelberg => solve_stackelberg_at(model, s, caps, tolerance),
        Criterion::General => Err(Error::InvalidArgument("no exact solver for general-sum games".into())),
    }
}

/// Zero-sum values at a set of points together with a max-of-concave certificate.
///
/// Each point's optimal leader mixture `σ` induces the concave function
/// `g_σ(s) = min_k (σᵀA_s)_k`; `components[p][c]` is the `c`-th distinct
/// mixture's function at point `p`.
#[derive(Debug, Clone)]
pub struct ConcaveFamily<S> {
    pub values: Vec<S>,
    pub mixtures: Vec<Vec<S>>,
    pub components: Vec<Vec<S>>,
}

pub fn zero_sum_concave_family<S: Scalar>(
    model: &PosgModel<S>,
    points: &[OccupancyState<S>],
    caps: Caps,
    tolerance: S,
) -> Result<ConcaveFamily<S>> {
    if !model.rewards_zero_sum() {
        return Err(Error::CriterionMismatch {
            declared: "zerosum".into(),
            reason: "r^1 differs from -r^2 or the game does not have two agents".into(),
        });
    }
    let mut matrices = Vec::with_capacity(points.len());
    let mut anchors = None;
    for s in points {
        let game = ContinuationGame::new(model, s, caps)?;
        match &anchors {
            None => anchors = Some(game.anchors.clone()),
            Some(a) if *a != game.anchors => {
                return Err(Error::InvalidArgument("points must share their support histories".into()));
            }
            Some(_) => {}
        }
        matrices.push(game.bimatrix()?.0);
    }
    let solutions = matrices
        .par_iter()
        .map(|a| matrix_game_value(a, tolerance))
        .collect::<Result<Vec<_>>>()?;
    let mut mixtures: Vec<Vec<S>> = Vec::new();
    for sol in &solutions {
        let known = mixtures.iter().any(|m| {
            m.iter().zip(&sol.row_mix).all(|(a, b)| (*a - *b).abs() <= S::tolerance())
        });
        if !known {
            mixtures.push(sol.row_mix.clone());
        }
    }
    let components = matrices
        .iter()
        .map(|a| {
            mixtures
                .iter()
                .map(|m| a.row_payoffs(m).into_iter().fold(S::infinity(), S::min))
                .collect()
        })
        .collect();
    Ok(ConcaveFamily { values: solutions.iter().map(|s| s.value).collect(), mixtures, components })
}
