use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use super::{belief_grid, random_prefix_state, PropertyReport, VerifyConfig, LAMBDAS};
use crate::error::{Error, Result};
use crate::evaluate::evaluate_occupancy;
use crate::model::{Criterion, PosgModel};
use crate::occupancy::{factorize, private_occupancy, recompose, MarginalOccupancy, OccupancyState};
use crate::policies::{all_histories, constant_policy, enumerate_pure_policies, random_distribution, JointPolicy, OthersPolicy};
use crate::solve::{solve_at, zero_sum_concave_family};

const LP_TOLERANCE: f64 = 1e-9;

fn value(model: &PosgModel<f64>, criterion: Criterion, s: &OccupancyState<f64>, config: &VerifyConfig) -> Result<f64> {
    let v = solve_at(model, criterion, s, config.caps, LP_TOLERANCE)?.value();
    Ok(config.perturb(s, v))
}

/// `max(0, υ(λa + (1-λ)b) - λυ(a) - (1-λ)υ(b))`.
fn convexity_gap(
    model: &PosgModel<f64>,
    criterion: Criterion,
    a: &OccupancyState<f64>,
    b: &OccupancyState<f64>,
    lambda: f64,
    config: &VerifyConfig,
) -> Result<f64> {
    let mix = OccupancyState::mix(&[(lambda, a), (1.0 - lambda, b)])?;
    let chord = lambda * value(model, criterion, a, config)? + (1.0 - lambda) * value(model, criterion, b, config)?;
    Ok((value(model, criterion, &mix, config)? - chord).max(0.0))
}

fn worst(v: Vec<f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

fn mixing_step(model: &PosgModel<f64>) -> usize {
    usize::min(1, model.horizon() - 1)
}

/// Convexity over mixtures of same-step occupancy states reached through pure joint actions.
fn dec_convexity(model: &PosgModel<f64>, fixture: &str, config: &VerifyConfig) -> Result<PropertyReport> {
    let deepest = mixing_step(model);
    let gaps = (0..config.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = config.rng(k);
            let t = k % (deepest + 1);
            let a = random_prefix_state(model, t, &mut rng)?;
            let b = random_prefix_state(model, t, &mut rng)?;
            let lambda = LAMBDAS[rng.random_range(0..LAMBDAS.len())];
            convexity_gap(model, Criterion::Common, &a, &b, lambda, config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PropertyReport::new(
        "dec-convexity",
        fixture,
        config.samples,
        worst(gaps),
        config.solver_tolerance,
        config.seed,
        format!("pairs at t in 0..={deepest}"),
    ))
}

/// Optimal value equals the best value of an enumerated pure joint policy.
fn dec_pwlc(model: &PosgModel<f64>, fixture: &str, config: &VerifyConfig) -> Result<PropertyReport> {
    let h = model.horizon();
    let per_agent = (0..model.n_agents())
        .map(|i| enumerate_pure_policies(model, i, h, config.caps.per_agent))
        .collect::<Result<Vec<_>>>()?;
    let total: u128 = per_agent.iter().map(|p| p.len() as u128).product();
    if total > config.caps.joint {
        return Err(Error::EnumerationTooLarge { count: total.to_string(), cap: config.caps.joint });
    }
    let joint: Vec<JointPolicy<f64>> = (0..total as usize)
        .map(|mut k| {
            let mut trees = Vec::with_capacity(per_agent.len());
            for p in per_agent.iter().rev() {
                trees.push(p[k % p.len()].clone());
                k /= p.len();
            }
            trees.reverse();
            JointPolicy::new(trees)
        })
        .collect::<Result<_>>()?;
    let n = config.samples.min(10);
    let gaps = (0..n)
        .map(|k| {
            let mut rng = config.rng(k);
            let belief = random_distribution::<f64, _>(&mut rng, model.n_states());
            let s = OccupancyState::from_belief(model, &belief);
            let v = value(model, Criterion::Common, &s, config)?;
            let best = joint
                .par_iter()
                .map(|p| evaluate_occupancy(model, p, &s, 0))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            Ok((v - best).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PropertyReport::new(
        "dec-pwlc",
        fixture,
        n,
        worst(gaps),
        config.solver_tolerance,
        config.seed,
        format!("random initial beliefs against {total} pure joint policies"),
    ))
}

/// Initial occupancy states to certify: a belief grid on two-state models, random beliefs otherwise.
fn certificate_points(model: &PosgModel<f64>, config: &VerifyConfig) -> Vec<OccupancyState<f64>> {
    if model.n_states() == 2 {
        belief_grid(config.grid).iter().map(|b| OccupancyState::from_belief(model, b)).collect()
    } else {
        (0..config.grid)
            .map(|k| {
                let mut rng = config.rng(k);
                OccupancyState::from_belief(model, &random_distribution::<f64, _>(&mut rng, model.n_states()))
            })
            .collect()
    }
}

/// Max-of-concave certificate over the optimal leader mixtures, plus the
/// standard-basis midpoint gap on two-state models.
fn zs_certificate(model: &PosgModel<f64>, fixture: &str, config: &VerifyConfig) -> Result<Vec<PropertyReport>> {
    let points = certificate_points(model, config);
    let family = zero_sum_concave_family(model, &points, config.caps, LP_TOLERANCE)?;
    let values: Vec<f64> = points.iter().zip(&family.values).map(|(s, v)| config.perturb(s, *v)).collect();
    let mut violation = 0.0f64;
    for (v, comps) in values.iter().zip(&family.components) {
        let top = comps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        violation = violation.max((top - v).abs());
        for c in comps {
            violation = violation.max(c - v);
        }
    }
    let mut reports = vec![PropertyReport::new(
        "zs-max-of-concave",
        fixture,
        points.len(),
        violation,
        config.solver_tolerance,
        config.seed,
        format!("{} distinct optimal leader mixtures", family.mixtures.len()),
    )];
    if model.n_states() == 2 {
        let mut gap = f64::NEG_INFINITY;
        for i in 0..values.len() {
            for j in (i + 2..values.len()).step_by(2) {
                gap = gap.max(values[(i + j) / 2] - 0.5 * (values[i] + values[j]));
            }
        }
        reports.push(
            PropertyReport::new(
                "zs-standard-basis-gap",
                fixture,
                points.len(),
                gap,
                0.0,
                config.seed,
                "largest midpoint concavity gap over belief grid pairs, expected positive",
            )
            .as_diagnostic(),
        );
    }
    Ok(reports)
}

/// Convexity over mixtures of agent 2's private occupancy states that share
/// agent 1's prefix and differ only in their weights.
fn b2_convexity(
    model: &PosgModel<f64>,
    fixture: &str,
    criterion: Criterion,
    config: &VerifyConfig,
) -> Result<PropertyReport> {
    let t = mixing_step(model);
    let h = model.horizon();
    let gaps = (0..config.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = config.rng(k);
            let belief = random_distribution::<f64, _>(&mut rng, model.n_states());
            let lead = rng.random_range(0..model.n_actions(0));
            let others = OthersPolicy::new(1, vec![Some(constant_policy(model, 0, h, lead)), None]);
            let mut pool = Vec::new();
            for anchor in all_histories(model, 1, t) {
                match private_occupancy(model, &belief, &others, 1, &anchor) {
                    Ok(c) => pool.push(c.as_occupancy()),
                    Err(Error::UnreachableHistory(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            let size = rng.random_range(pool.len().min(2)..=pool.len().min(3));
            let picked = sample(&mut rng, pool.len(), size).into_vec();
            let mixture = |w: &[f64]| {
                let parts: Vec<(f64, &OccupancyState<f64>)> = picked.iter().zip(w).map(|(&c, &x)| (x, &pool[c])).collect();
                OccupancyState::mix(&parts)
            };
            let wa = random_distribution::<f64, _>(&mut rng, size);
            let wb = random_distribution::<f64, _>(&mut rng, size);
            let lambda = LAMBDAS[rng.random_range(0..LAMBDAS.len())];
            convexity_gap(model, criterion, &mixture(&wa)?, &mixture(&wb)?, lambda, config)
        })
        .collect::<Result<Vec<_>>>()?;
    let name = match criterion {
        Criterion::Stackelberg => "st-b2-convexity",
        _ => "zs-b2-convexity",
    };
    Ok(PropertyReport::new(
        name,
        fixture,
        config.samples,
        worst(gaps),
        config.solver_tolerance,
        config.seed,
        format!("agent 1 value over reweighted agent 2 private occupancy states at t = {t}"),
    ))
}

/// Convexity in agent 2's marginal occupancy state at a fixed conditional.
fn marginal_convexity(
    model: &PosgModel<f64>,
    fixture: &str,
    criterion: Criterion,
    config: &VerifyConfig,
) -> Result<PropertyReport> {
    let t = mixing_step(model);
    let gaps = (0..config.samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = config.rng(k);
            let s = random_prefix_state(model, t, &mut rng)?;
            let (m, c) = factorize(&s, 1);
            let keys: Vec<_> = m.map.keys().cloned().collect();
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| MarginalOccupancy {
                agent: 1,
                map: keys.iter().cloned().zip(random_distribution::<f64, _>(rng, keys.len())).collect(),
            };
            let a = recompose(t, &draw(&mut rng), &c)?;
            let b = recompose(t, &draw(&mut rng), &c)?;
            let lambda = LAMBDAS[rng.random_range(0..LAMBDAS.len())];
            convexity_gap(model, criterion, &a, &b, lambda, config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PropertyReport::new(
        "marginal-convexity",
        fixture,
        config.samples,
        worst(gaps),
        config.solver_tolerance,
        config.seed,
        format!("random marginals over agent 2 histories at t = {t}, conditional held fixed"),
    ))
}

/// Structural checks on the optimal value of the occupancy game under `criterion`.
pub fn check_master_structure(
    model: &PosgModel<f64>,
    fixture: &str,
    criterion: Criterion,
    config: &VerifyConfig,
) -> Result<Vec<PropertyReport>> {
    match criterion {
        Criterion::Common => Ok(vec![dec_convexity(model, fixture, config)?, dec_pwlc(model, fixture, config)?]),
        Criterion::ZeroSum => {
            let mut reports = zs_certificate(model, fixture, config)?;
            reports.push(b2_convexity(model, fixture, criterion, config)?);
            reports.push(marginal_convexity(model, fixture, criterion, config)?);
            Ok(reports)
        }
        Criterion::Stackelberg => Ok(vec![
            b2_convexity(model, fixture, criterion, config)?,
            marginal_convexity(model, fixture, criterion, config)?,
        ]),
        Criterion::General => Err(Error::CriterionMismatch {
            declared: "general".into(),
            reason: "no structural result covers general-sum games".into(),
        }),
    }
}
