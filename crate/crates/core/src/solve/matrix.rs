use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::solve::lp::{solve_lp, LinearProgram, LpOutcome, Relation};

/// Payoff matrix for the row player, who maximizes.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGame<S> {
    pub rows: usize,
    pub cols: usize,
    pub payoff: Vec<S>,
}

impl<S: Scalar> MatrixGame<S> {
    pub fn new(rows: usize, cols: usize, payoff: Vec<S>) -> Result<Self> {
        if rows == 0 || cols == 0 || payoff.len() != rows * cols {
            return Err(Error::InvalidArgument("matrix game needs a nonempty rows × cols payoff".into()));
        }
        if payoff.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix game entries must be finite".into()));
        }
        Ok(MatrixGame { rows, cols, payoff })
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged matrix".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn at(&self, r: usize, c: usize) -> S {
        self.payoff[r * self.cols + c]
    }

    /// Row mixture's payoff against each column.
    pub fn row_payoffs(&self, row_mix: &[S]) -> Vec<S> {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| row_mix[r] * self.at(r, c)).sum())
            .collect()
    }

    /// Each row's payoff against a column mixture.
    pub fn col_payoffs(&self, col_mix: &[S]) -> Vec<S> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| col_mix[c] * self.at(r, c)).sum())
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct MatrixSolution<S> {
    pub value: S,
    pub row_mix: Vec<S>,
    pub col_mix: Vec<S>,
    pub pivots: usize,
    /// Gap between the best column response to `row_mix` and the best row response to `col_mix`.
    pub residual: S,
}

fn normalized<S: Scalar>(v: &[S]) -> Vec<S> {
    let total: S = v.iter().copied().sum();
    v.iter().map(|x| *x / total).collect()
}

/// Indices of rows and columns that survive iterated removal of weakly
/// dominated strategies, keeping the lowest index among identical ones.
fn undominated<S: Scalar>(game: &MatrixGame<S>) -> (Vec<usize>, Vec<usize>) {
    let mut rows: Vec<usize> = (0..game.rows).collect();
    let mut cols: Vec<usize> = (0..game.cols).collect();
    loop {
        let before = rows.len() + cols.len();
        let row_dominated = |r: usize, by: usize| cols.iter().all(|&c| game.at(by, c) >= game.at(r, c));
        let kept: Vec<usize> = rows
            .iter()
            .copied()
            .filter(|&r| {
                !rows.iter().any(|&o| o != r && row_dominated(r, o) && (o < r || !row_dominated(o, r)))
            })
            .collect();
        rows = kept;
        let col_dominated = |c: usize, by: usize| rows.iter().all(|&r| game.at(r, by) <= game.at(r, c));
        let kept: Vec<usize> = cols
            .iter()
            .copied()
            .filter(|&c| {
                !cols.iter().any(|&o| o != c && col_dominated(c, o) && (o < c || !col_dominated(o, c)))
            })
            .collect();
        cols = kept;
        if rows.len() + cols.len() == before {
            return (rows, cols);
        }
    }
}

/// Minimax value and optimal mixtures of a zero-sum matrix game.
///
/// Weakly dominated rows and columns are removed first. The reduced matrix is
/// rescaled into `[1, 2]` and both players' programs are solved by the simplex
/// method. `tolerance` bounds the saddle gap relative to the payoff range.
pub fn matrix_game_value<S: Scalar>(game: &MatrixGame<S>, tolerance: S) -> Result<MatrixSolution<S>> {
    let min = game.payoff.iter().copied().fold(S::infinity(), S::min);
    let max = game.payoff.iter().copied().fold(S::neg_infinity(), S::max);
    let range = (max - min).max(S::one());
    let shifted = |r: usize, c: usize| (game.at(r, c) - min) / range + S::one();
    let (keep_rows, keep_cols) = undominated(game);

    // Row player: maximize v subject to xᵀA ≥ v and Σx = 1, with v last.
    let mut rows = Vec::with_capacity(keep_cols.len() + 1);
    for &c in &keep_cols {
        let mut coef: Vec<S> = keep_rows.iter().map(|&r| shifted(r, c)).collect();
        coef.push(-S::one());
        rows.push((coef, Relation::Ge, S::zero()));
    }
    let mut simplex: Vec<S> = vec![S::one(); keep_rows.len()];
    simplex.push(S::zero());
    rows.push((simplex, Relation::Eq, S::one()));
    let mut objective = vec![S::zero(); keep_rows.len()];
    objective.push(S::one());
    let row_lp = LinearProgram { objective, rows };
    // Column player: minimize w subject to Ay ≤ w and Σy = 1, with w last.
    let mut rows = Vec::with_capacity(keep_rows.len() + 1);
    for &r in &keep_rows {
        let mut coef: Vec<S> = keep_cols.iter().map(|&c| shifted(r, c)).collect();
        coef.push(-S::one());
        rows.push((coef, Relation::Le, S::zero()));
    }
    let mut simplex: Vec<S> = vec![S::one(); keep_cols.len()];
    simplex.push(S::zero());
    rows.push((simplex, Relation::Eq, S::one()));
    let mut objective = vec![S::zero(); keep_cols.len()];
    objective.push(-S::one());
    let col_lp = LinearProgram { objective, rows };
    let LpOutcome::Optimal(row) = solve_lp(&row_lp)? else {
        return Err(Error::LinearProgram("row player's program not optimal".into()));
    };
    let LpOutcome::Optimal(col) = solve_lp(&col_lp)? else {
        return Err(Error::LinearProgram("column player's program not optimal".into()));
    };
    let spread = |keep: &[usize], x: &[S], n: usize| {
        let mut full = vec![S::zero(); n];
        for (&k, &v) in keep.iter().zip(&normalized(x)) {
            full[k] = v;
        }
        full
    };
    let row_mix = spread(&keep_rows, &row.x[..keep_rows.len()], game.rows);
    let col_mix = spread(&keep_cols, &col.x[..keep_cols.len()], game.cols);
    let lower = game.row_payoffs(&row_mix).into_iter().fold(S::infinity(), S::min);
    let upper = game.col_payoffs(&col_mix).into_iter().fold(S::neg_infinity(), S::max);
    let residual = upper - lower;
    if residual > tolerance * range {
        return Err(Error::LinearProgram(format!(
            "saddle gap {residual} above tolerance {tolerance} times payoff range {range}"
        )));
    }
    let value = (lower + upper) / (S::one() + S::one());
    Ok(MatrixSolution { value, row_mix, col_mix, pivots: row.pivots + col.pivots, residual })
}

#[derive(Debug, Clone)]
pub struct StackelbergSolution<S> {
    pub leader_value: S,
    pub follower_value: S,
    pub leader_mix: Vec<S>,
    pub follower_response: usize,
    pub pivots: usize,
}

/// Strong Stackelberg equilibrium of a bimatrix game with the row player leading.
///
/// One program per follower column maximizes the leader's payoff over leader
/// mixtures under which that column is a follower best response; the best
/// column wins, lowest index first among ties.
pub fn stackelberg_matrix<S: Scalar>(
    leader: &MatrixGame<S>,
    follower: &MatrixGame<S>,
    tolerance: S,
) -> Result<StackelbergSolution<S>> {
    if leader.rows != follower.rows || leader.cols != follower.cols {
        return Err(Error::InvalidArgument("leader and follower matrices differ in shape".into()));
    }
    let (m, n) = (leader.rows, leader.cols);
    let mut best: Option<StackelbergSolution<S>> = None;
    let mut pivots = 0;
    for k in 0..n {
        let mut rows: Vec<(Vec<S>, Relation, S)> = (0..n)
            .filter(|&k2| k2 != k)
            .map(|k2| {
                let coef = (0..m).map(|j| follower.at(j, k2) - follower.at(j, k)).collect();
                (coef, Relation::Le, S::zero())
            })
            .collect();
        rows.push((vec![S::one(); m], Relation::Eq, S::one()));
        let lp = LinearProgram { objective: (0..m).map(|j| leader.at(j, k)).collect(), rows };
        match solve_lp(&lp)? {
            LpOutcome::Optimal(sol) => {
                pivots += sol.pivots;
                let better = best.as_ref().is_none_or(|b| sol.objective > b.leader_value + tolerance);
                if better {
                    let mix = normalized(&sol.x);
                    let follower_value = (0..m).map(|j| mix[j] * follower.at(j, k)).sum();
                    best = Some(StackelbergSolution {
                        leader_value: sol.objective,
                        follower_value,
                        leader_mix: mix,
                        follower_response: k,
                        pivots: 0,
                    });
                }
            }
            LpOutcome::Infeasible => {}
            LpOutcome::Unbounded => {
                return Err(Error::LinearProgram("bounded Stackelberg program reported unbounded".into()));
            }
        }
    }
    let mut sol = best.ok_or_else(|| Error::LinearProgram("no follower column is ever a best response".into()))?;
    sol.pivots = pivots;
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_closed_form() {
        let g = MatrixGame::from_rows(&[vec![1.0f64, 0.0], vec![0.0, 2.0]]).unwrap();
        let s = matrix_game_value(&g, 1e-9).unwrap();
        assert!((s.value - 2.0 / 3.0).abs() < 1e-9);
        assert!((s.row_mix[0] - 2.0 / 3.0).abs() < 1e-9);
        let g = MatrixGame::from_rows(&[vec![1.0f64, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matrix_game_value(&g, 1e-9).unwrap().value.abs() < 1e-9);
        let g = MatrixGame::from_rows(&[vec![-3.5f64]]).unwrap();
        assert!((matrix_game_value(&g, 1e-9).unwrap().value + 3.5).abs() < 1e-9);
    }

    #[test]
    fn commitment_beats_nash_in_classic_example() {
        let leader = MatrixGame::from_rows(&[vec![2.0f64, 4.0], vec![1.0, 3.0]]).unwrap();
        let follower = MatrixGame::from_rows(&[vec![1.0f64, 0.0], vec![0.0, 1.0]]).unwrap();
        let s = stackelberg_matrix(&leader, &follower, 1e-9).unwrap();
        assert!((s.leader_value - 3.5).abs() < 1e-9);
        assert_eq!(s.follower_response, 1);
    }
}
