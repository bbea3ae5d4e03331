use rand::Rng;
use rayon::prelude::*;

use super::{random_prefix_state, PropertyReport, VerifyConfig};
use crate::error::{Error, Result};
use crate::model::PosgModel;
use crate::occupancy::OccupancyState;
use crate::solve::solve_zero_sum_at;

/// `c·(1-γ^(ℓ-t))/(1-γ)`, or `(ℓ-t)·c` when `γ = 1`.
pub fn lipschitz_constant(gamma: f64, reward_bound: f64, horizon: usize, t: usize) -> f64 {
    let remaining = horizon.saturating_sub(t);
    if gamma >= 1.0 {
        remaining as f64 * reward_bound
    } else {
        (1.0 - gamma.powi(remaining as i32)) / (1.0 - gamma) * reward_bound
    }
}

/// `|υ(s) - υ(s')| ≤ κ_t‖s - s'‖₁` on random same-step pairs of a zero-sum game.
///
/// The second state of each pair sits at a log-uniform 1-norm scale from the
/// first so that both distant and nearby pairs are covered.
pub fn check_lipschitz(model: &PosgModel<f64>, fixture: &str, config: &VerifyConfig) -> Result<PropertyReport> {
    if !model.rewards_zero_sum() {
        return Err(Error::CriterionMismatch {
            declared: "zerosum".into(),
            reason: "the Lipschitz suite needs a two-agent zero-sum game".into(),
        });
    }
    let h = model.horizon();
    let deepest = usize::min(1, h - 1);
    let c = model.reward_bound();
    let value = |s: &OccupancyState<f64>| -> Result<f64> {
        Ok(config.perturb(s, solve_zero_sum_at(model, s, config.caps, 1e-9)?.value()))
    };
    let gaps = (0..config.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = config.rng(k);
            let t = k % (deepest + 1);
            let a = random_prefix_state(model, t, &mut rng)?;
            let far = random_prefix_state(model, t, &mut rng)?;
            let delta = 10f64.powf(-rng.random_range(0.0..6.0));
            let b = OccupancyState::mix(&[(1.0 - delta, &a), (delta, &far)])?;
            let kappa = lipschitz_constant(model.discount(), c, h, t);
            Ok(((value(&a)? - value(&b)?).abs() - kappa * a.l1_distance(&b)).max(0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PropertyReport::new(
        "lipschitz",
        fixture,
        config.samples,
        gaps.into_iter().fold(0.0, f64::max),
        config.solver_tolerance,
        config.seed,
        format!(
            "norm l1, kappa_0 = {}, pairs at t in 0..={deepest}",
            lipschitz_constant(model.discount(), c, h, 0)
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_matches_closed_form() {
        assert!((lipschitz_constant(0.9, 2.0, 3, 0) - 5.42).abs() < 1e-12);
        assert_eq!(lipschitz_constant(1.0, 2.0, 3, 1), 4.0);
    }
}
