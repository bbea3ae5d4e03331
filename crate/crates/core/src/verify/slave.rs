use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use super::{PropertyReport, VerifyConfig};
use crate::error::{Error, Result};
use crate::evaluate::{evaluate_from, linear_eval};
use crate::model::PosgModel;
use crate::occupancy::{private_occupancy, OccupancyState, PrivateOccupancyState};
use crate::policies::{all_histories, enumerate_pure_policies, random_distribution, OthersPolicy};
use crate::solve::{best_response_history_from, best_response_private_from, private_value};

/// Reachable private occupancy states of `agent` at step `t`.
fn components(
    model: &PosgModel<f64>,
    others: &OthersPolicy<f64>,
    agent: usize,
    t: usize,
) -> Result<Vec<PrivateOccupancyState<f64>>> {
    let mut out = Vec::new();
    for h in all_histories(model, agent, t) {
        match private_occupancy(model, model.start(), others, agent, &h) {
            Ok(c) => out.push(c),
            Err(Error::UnreachableHistory(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Structure of the best-response value against fixed `others`.
///
/// Linearity: over random mixtures of `agent`'s private occupancy states, the
/// optimal value of the mixture equals the weighted optimal values of the
/// components. Piecewise linearity and convexity: on random initial beliefs,
/// the optimal value equals the best linear evaluation over all pure policies.
pub fn check_slave_structure(
    model: &PosgModel<f64>,
    fixture: &str,
    others: &OthersPolicy<f64>,
    agent: usize,
    config: &VerifyConfig,
) -> Result<Vec<PropertyReport>> {
    let t = usize::min(1, model.horizon() - 1);
    let pool = components(model, others, agent, t)?;
    let linearity = (0..config.samples)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let mut rng = config.rng(k);
            let size = rng.random_range(1..=pool.len().min(4));
            let picked = sample(&mut rng, pool.len(), size).into_vec();
            let weights = random_distribution::<f64, _>(&mut rng, size);
            let parts: Vec<(f64, OccupancyState<f64>)> =
                picked.iter().zip(&weights).map(|(&c, &w)| (w, pool[c].as_occupancy())).collect();
            let refs: Vec<(f64, &OccupancyState<f64>)> = parts.iter().map(|(w, s)| (*w, s)).collect();
            let mixture = OccupancyState::mix(&refs)?;
            let lhs = config.perturb(&mixture, best_response_history_from(model, others, agent, &mixture)?.value);
            let mut rhs = 0.0;
            for (&c, &w) in picked.iter().zip(&weights) {
                rhs += w * private_value(model, others, &pool[c])?;
            }
            Ok((lhs - rhs).abs())
        })
        .collect::<Result<Vec<_>>>()?;

    let policies = enumerate_pure_policies(model, agent, model.horizon(), config.caps.per_agent)?;
    let s0 = OccupancyState::from_belief(model, &vec![1.0 / model.n_states() as f64; model.n_states()]);
    let tables = policies
        .par_iter()
        .map(|p| Ok(evaluate_from(model, &others.with(p.clone()), agent, &s0)?.swap_remove(0)))
        .collect::<Result<Vec<_>>>()?;
    let n_beliefs = config.samples.min(20);
    let pwlc = (0..n_beliefs)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let mut rng = config.rng(config.samples + k);
            let belief = random_distribution::<f64, _>(&mut rng, model.n_states());
            let s = OccupancyState::from_belief(model, &belief);
            let v = config.perturb(&s, best_response_private_from(model, others, agent, &s)?.value);
            let mut best = f64::NEG_INFINITY;
            for table in &tables {
                best = best.max(linear_eval(&s, table)?);
            }
            Ok((v - best).abs())
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(vec![
        PropertyReport::new(
            &format!("slave-linearity-agent{}", agent + 1),
            fixture,
            config.samples,
            linearity.into_iter().fold(0.0, f64::max),
            config.exact_tolerance,
            config.seed,
            format!("mixtures of private occupancy states at t = {t}, {} components available", pool.len()),
        ),
        PropertyReport::new(
            &format!("slave-pwlc-agent{}", agent + 1),
            fixture,
            n_beliefs,
            pwlc.into_iter().fold(0.0, f64::max),
            config.exact_tolerance,
            config.seed,
            format!("random initial beliefs against {} pure policies", policies.len()),
        ),
    ])
}
