//! Numerical verification harness.
//!
//! Every check returns [`PropertyReport`] records that serialize to one JSON
//! line each. Diagnostics are reported alongside but never decide the
//! aggregate outcome.

pub mod lipschitz;
pub mod master;
pub mod raw;
pub mod slave;
pub mod sufficiency;

use std::hash::{DefaultHasher, Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Criterion, PosgModel};
use crate::occupancy::{step, OccupancyState};
use crate::policies::{random_distribution, DecisionRule, JointDecisionRule, OthersPolicy, PureTreeSet};
use crate::solve::Caps;

pub use lipschitz::{check_lipschitz, lipschitz_constant};
pub use master::check_master_structure;
pub use slave::check_slave_structure;
pub use sufficiency::{check_one_sided, check_sufficiency_master, check_sufficiency_private};

/// Outcome of one property check.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub fixture: String,
    pub samples: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Informational measurement excluded from the aggregate verdict.
    pub diagnostic: bool,
    pub seed: u64,
    pub notes: String,
}

impl PropertyReport {
    pub fn new(
        property: &str,
        fixture: &str,
        samples: usize,
        max_violation: f64,
        tolerance: f64,
        seed: u64,
        notes: impl Into<String>,
    ) -> Self {
        PropertyReport {
            property: property.into(),
            fixture: fixture.into(),
            samples,
            max_violation,
            tolerance,
            passed: max_violation <= tolerance,
            diagnostic: false,
            seed,
            notes: notes.into(),
        }
    }

    pub fn as_diagnostic(mut self) -> Self {
        self.diagnostic = true;
        self
    }

    pub fn status(&self) -> &'static str {
        match (self.diagnostic, self.passed) {
            (true, _) => "DIAG",
            (false, true) => "PASS",
            (false, false) => "FAIL",
        }
    }

    pub fn to_json_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            status: &'a str,
            #[serde(flatten)]
            report: &'a PropertyReport,
        }
        serde_json::to_string(&Line { status: self.status(), report: self }).expect("report serializes")
    }
}

/// True when every non-diagnostic report passed.
pub fn all_passed(reports: &[PropertyReport]) -> bool {
    reports.iter().filter(|r| !r.diagnostic).all(|r| r.passed)
}

/// Deliberate corruptions used as negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Fault {
    #[default]
    None,
    /// The occupancy route plays the uniform joint decision rule at step `t`.
    UniformJointRule { t: usize },
    /// The private-occupancy route assumes the other agents act uniformly.
    UniformOthersRule,
    /// Optimal values are shifted by `amplitude · sin(hash(s))`.
    PerturbValues { amplitude: f64 },
}

#[derive(Debug, Clone)]
pub struct VerifyConfig {
    pub samples: usize,
    pub seed: u64,
    /// Tolerance for identities that hold up to rounding.
    pub exact_tolerance: f64,
    /// Tolerance for inequalities that go through a matrix-game solver.
    pub solver_tolerance: f64,
    /// Points of the belief grid used on two-state models.
    pub grid: usize,
    pub caps: Caps,
    pub fault: Fault,
    /// Overrides the model's declared or inferred criterion.
    pub criterion: Option<Criterion>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: 100,
            seed: 0,
            exact_tolerance: 1e-9,
            solver_tolerance: 1e-6,
            grid: 101,
            caps: Caps::default(),
            fault: Fault::None,
            criterion: None,
        }
    }
}

impl VerifyConfig {
    /// Generator for sample `k`, independent of evaluation order.
    pub(crate) fn rng(&self, k: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64);
        rng
    }

    /// Applies the value perturbation fault, if any.
    pub(crate) fn perturb(&self, s: &OccupancyState<f64>, v: f64) -> f64 {
        match self.fault {
            Fault::PerturbValues { amplitude } => v + amplitude * (state_hash(s) as f64).sin(),
            _ => v,
        }
    }
}

fn state_hash(s: &OccupancyState<f64>) -> u64 {
    let mut h = DefaultHasher::new();
    s.t.hash(&mut h);
    for (k, p) in &s.entries {
        k.hash(&mut h);
        p.to_bits().hash(&mut h);
    }
    h.finish() % 1_000_003
}

/// Largest absolute difference between two slices of equal length.
pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub(crate) fn uniform_joint_rule(model: &PosgModel<f64>, s: &OccupancyState<f64>) -> JointDecisionRule<f64> {
    JointDecisionRule {
        rules: (0..model.n_agents())
            .map(|i| {
                let n = model.n_actions(i);
                DecisionRule::constant(i, s.t, &s.histories(i), &vec![1.0 / n as f64; n])
            })
            .collect(),
    }
}

/// Other agents playing pure tree 0, the first action everywhere.
pub fn default_others(model: &PosgModel<f64>, agent: usize) -> OthersPolicy<f64> {
    let h = model.horizon();
    let trees = (0..model.n_agents())
        .map(|j| (j != agent).then(|| PureTreeSet::for_agent(model, j, h).tree(j, h, 0)))
        .collect();
    OthersPolicy::new(agent, trees)
}

/// Occupancy state reached from a random belief through a random pure joint action.
pub fn random_prefix_state<R: Rng>(
    model: &PosgModel<f64>,
    t: usize,
    rng: &mut R,
) -> Result<OccupancyState<f64>> {
    let belief = random_distribution::<f64, _>(rng, model.n_states());
    let mut s = OccupancyState::from_belief(model, &belief);
    for _ in 0..t {
        let rule = JointDecisionRule {
            rules: (0..model.n_agents())
                .map(|i| {
                    let mut dist = vec![0.0; model.n_actions(i)];
                    dist[rng.random_range(0..model.n_actions(i))] = 1.0;
                    DecisionRule::constant(i, s.t, &s.histories(i), &dist)
                })
                .collect(),
        };
        let branches = step(model, &s, &rule)?;
        let pick = sample_index(rng, &branches.iter().map(|b| b.prob).collect::<Vec<_>>());
        s = branches.into_iter().nth(pick).expect("branch").next;
    }
    Ok(s)
}

/// Index drawn with probability proportional to `weights`.
pub(crate) fn sample_index<R: Rng>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut r = rng.random::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if r < w {
            return k;
        }
        r -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// Mixing weights used by the convexity checks.
pub(crate) const LAMBDAS: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Beliefs `(k/(n-1), 1 - k/(n-1))` on a two-state model.
pub fn belief_grid(n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| {
            let b = k as f64 / (n - 1) as f64;
            [b, 1.0 - b]
        })
        .collect()
}

const SUITES: [&str; 5] = ["sufficiency", "slave", "master", "lipschitz", "all"];

/// Runs the suites named in the comma-separated `selection`.
///
/// `all` runs every suite; the Lipschitz suite is then skipped for models
/// that are not zero-sum. An empty selection yields no reports.
pub fn run_suite(
    model: &PosgModel<f64>,
    fixture: &str,
    selection: &str,
    config: &VerifyConfig,
) -> Result<Vec<PropertyReport>> {
    let names: Vec<&str> = selection.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if let Some(bad) = names.iter().find(|n| !SUITES.contains(n)) {
        return Err(Error::UnknownSuite(bad.to_string()));
    }
    let everything = names.contains(&"all");
    let wants = |name: &str| everything || names.contains(&name);
    let criterion = match config.criterion.or(model.declared_criterion()) {
        Some(c) => c,
        None => model.classify()?,
    };
    let mut reports = Vec::new();
    if wants("sufficiency") {
        reports.push(check_sufficiency_master(model, fixture, config)?);
        for i in 0..model.n_agents() {
            reports.push(check_sufficiency_private(model, fixture, i, config)?);
        }
    }
    if wants("slave") {
        reports.extend(check_slave_structure(model, fixture, &default_others(model, 0), 0, config)?);
    }
    if wants("master") {
        if criterion == Criterion::General {
            log::warn!("no master structure checks for general-sum games");
        } else {
            reports.extend(check_master_structure(model, fixture, criterion, config)?);
        }
    }
    if names.contains(&"lipschitz") || (everything && criterion == Criterion::ZeroSum) {
        reports.push(check_lipschitz(model, fixture, config)?);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_status_follows_tolerance() {
        let r = PropertyReport::new("p", "f", 1, 1e-10, 1e-9, 0, "");
        assert_eq!(r.status(), "PASS");
        let r = PropertyReport::new("p", "f", 1, 1e-8, 1e-9, 0, "");
        assert_eq!(r.status(), "FAIL");
        assert!(r.to_json_line().contains("\"status\":\"FAIL\""));
        assert_eq!(r.clone().as_diagnostic().status(), "DIAG");
        assert!(all_passed(&[r.as_diagnostic()]));
    }

    #[test]
    fn grid_has_endpoints() {
        let g = belief_grid(2);
        assert_eq!(g, vec![[0.0, 1.0], [1.0, 0.0]]);
    }
}
