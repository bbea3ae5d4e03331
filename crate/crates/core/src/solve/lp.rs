use std::num::NonZeroU32;

use highs::{HighsModelStatus, RowProblem, Sense};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// `maximize c·x` subject to `rows` and `x ≥ 0`.
#[derive(Debug, Clone)]
pub struct LinearProgram<S> {
    pub objective: Vec<S>,
    pub rows: Vec<(Vec<S>, Relation, S)>,
}

#[derive(Debug, Clone)]
pub struct LpSolution<S> {
    pub x: Vec<S>,
    pub objective: S,
    pub pivots: usize,
}

#[derive(Debug, Clone)]
pub enum LpOutcome<S> {
    Optimal(LpSolution<S>),
    Infeasible,
    Unbounded,
}

const FEASIBILITY: f64 = 1e-10;

fn run<S: Scalar>(lp: &LinearProgram<S>, presolve: bool) -> Result<(HighsModelStatus, Vec<f64>, usize)> {
    let n = lp.objective.len();
    let mut problem = RowProblem::default();
    let vars: Vec<_> = lp.objective.iter().map(|c| problem.add_column(c.as_f64(), 0.0..)).collect();
    for (coef, rel, b) in &lp.rows {
        if coef.len() != n {
            return Err(Error::LinearProgram("row width differs from objective".into()));
        }
        let terms: Vec<_> = vars
            .iter()
            .zip(coef)
            .filter(|(_, c)| **c != S::zero())
            .map(|(v, c)| (*v, c.as_f64()))
            .collect();
        let b = b.as_f64();
        match rel {
            Relation::Le => problem.add_row(..=b, terms),
            Relation::Ge => problem.add_row(b.., terms),
            Relation::Eq => problem.add_row(b..=b, terms),
        }
    }
    let mut model = problem.optimise(Sense::Maximise);
    model.make_quiet();
    model.set_threads(NonZeroU32::MIN);
    model.set_option("primal_feasibility_tolerance", FEASIBILITY);
    model.set_option("dual_feasibility_tolerance", FEASIBILITY);
    if !presolve {
        model.set_option("presolve", "off");
    }
    let solved = model
        .try_solve()
        .map_err(|e| Error::LinearProgram(format!("solver rejected the program: {e:?}")))?;
    let x = solved.get_solution().columns().to_vec();
    Ok((solved.status(), x, solved.simplex_iteration_count().max(0) as usize))
}

/// Solves `lp` with the HiGHS simplex solver in double precision.
pub fn solve_lp<S: Scalar>(lp: &LinearProgram<S>) -> Result<LpOutcome<S>> {
    let (mut status, mut x, mut pivots) = run(lp, true)?;
    if status == HighsModelStatus::UnboundedOrInfeasible {
        (status, x, pivots) = run(lp, false)?;
    }
    match status {
        HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => {
            let x: Vec<S> = x.into_iter().map(|v| S::lit(v.max(0.0))).collect();
            let objective = x.iter().zip(&lp.objective).map(|(a, c)| *a * *c).sum();
            Ok(LpOutcome::Optimal(LpSolution { x, objective, pivots }))
        }
        HighsModelStatus::Infeasible => Ok(LpOutcome::Infeasible),
        HighsModelStatus::Unbounded => Ok(LpOutcome::Unbounded),
        other => Err(Error::LinearProgram(format!("solver stopped with status {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximization() {
        let lp = LinearProgram {
            objective: vec![3.0f64, 5.0],
            rows: vec![
                (vec![1.0, 0.0], Relation::Le, 4.0),
                (vec![0.0, 2.0], Relation::Le, 12.0),
                (vec![3.0, 2.0], Relation::Le, 18.0),
            ],
        };
        let LpOutcome::Optimal(sol) = solve_lp(&lp).unwrap() else { panic!() };
        assert!((sol.objective - 36.0).abs() < 1e-9);
        assert!((sol.x[0] - 2.0).abs() < 1e-9 && (sol.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn equality_and_infeasibility() {
        let lp = LinearProgram {
            objective: vec![1.0f64, 1.0],
            rows: vec![(vec![1.0, 1.0], Relation::Eq, 1.0), (vec![1.0, -1.0], Relation::Ge, 0.5)],
        };
        let LpOutcome::Optimal(sol) = solve_lp(&lp).unwrap() else { panic!() };
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert!(sol.x[0] >= 0.75 - 1e-9);
        let lp = LinearProgram {
            objective: vec![1.0f64],
            rows: vec![(vec![1.0], Relation::Le, 1.0), (vec![1.0], Relation::Ge, 2.0)],
        };
        assert!(matches!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible));
        let lp = LinearProgram { objective: vec![1.0f64], rows: vec![(vec![-1.0], Relation::Le, 1.0)] };
        assert!(matches!(solve_lp(&lp).unwrap(), LpOutcome::Unbounded));
    }
}
