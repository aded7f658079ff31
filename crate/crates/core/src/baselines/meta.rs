//! Meta-Strategy: best response to the empirical opponent, falling back to
//! the maximin strategy while the running reward is below the security level.

use super::mdp::solve_mdp;
use crate::error::{check_index, IbrlError, Result};
use crate::game::StochasticGame;
use crate::opponent::SufficientStats;
use crate::planner::{argmax, sample_index};

/// Maximin solution of a zero-sum matrix game (row player maximizes).
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGameSolution {
    pub value: f64,
    /// Lower and upper bounds on the game value.
    pub bounds: (f64, f64),
    pub strategy: Vec<f64>,
    pub rounds: usize,
}

/// Fictitious play on a row-major `rows × cols` payoff matrix. Stops when the
/// best lower and upper bounds seen so far are within `tol`, or after
/// `max_rounds`. The returned strategy guarantees the lower bound.
pub fn fictitious_play(payoff: &[f64], rows: usize, cols: usize, max_rounds: usize, tol: f64) -> MatrixGameSolution {
    assert_eq!(payoff.len(), rows * cols, "payoff matrix shape");
    let g = |u: usize, v: usize| payoff[u * cols + v];
    let mut row_counts = vec![0u64; rows];
    let mut col_counts = vec![0u64; cols];
    // cumulative payoffs against the opponents' past plays
    let mut vs_rows = vec![0.0; cols];
    let mut vs_cols = vec![0.0; rows];
    let mut best_lower = (f64::NEG_INFINITY, vec![1.0 / rows as f64; rows]);
    let mut best_upper = f64::INFINITY;
    let (mut u, mut v) = (0, 0);
    let mut rounds = 0;
    for t in 1..=max_rounds.max(1) {
        rounds = t;
        row_counts[u] += 1;
        col_counts[v] += 1;
        for (c, acc) in vs_rows.iter_mut().enumerate() {
            *acc += g(u, c);
        }
        for (r, acc) in vs_cols.iter_mut().enumerate() {
            *acc += g(r, v);
        }
        let tf = t as f64;
        let lower = vs_rows.iter().copied().fold(f64::INFINITY, f64::min) / tf;
        let upper = vs_cols.iter().copied().fold(f64::NEG_INFINITY, f64::max) / tf;
        if lower > best_lower.0 {
            best_lower = (lower, row_counts.iter().map(|&c| c as f64 / tf).collect());
        }
        best_upper = best_upper.min(upper);
        if best_upper - best_lower.0 < tol {
            break;
        }
        // best responses to the empirical mixtures; lowest index on ties
        u = argmax(vs_cols.iter().copied()).0;
        v = argmax(vs_rows.iter().map(|x| -x)).0;
    }
    MatrixGameSolution {
        value: 0.5 * (best_lower.0 + best_upper),
        bounds: (best_lower.0, best_upper),
        strategy: best_lower.1,
        rounds,
    }
}

/// Per-state security values and maximin strategies of the zero-sum version
/// of the game.
#[derive(Clone, Debug, PartialEq)]
pub struct MaximinSolution {
    pub values: Vec<f64>,
    pub strategies: Vec<Vec<f64>>,
}

/// Shapley iteration: each sweep solves the per-state matrix games
/// `r_s(u,v) + φ Σ_{s'} p_s^{uv}(s') V(s')` by fictitious play.
pub fn maximin_values(
    game: &StochasticGame,
    tol: f64,
    max_sweeps: usize,
    fp_rounds: usize,
    fp_tol: f64,
) -> MaximinSolution {
    let (ns, nu, nv) = (game.num_states(), game.num_agent_actions(), game.num_opponent_actions());
    let phi = game.discount();
    let mut values = vec![0.0; ns];
    let mut strategies = vec![vec![1.0 / nu as f64; nu]; ns];
    for _ in 0..max_sweeps.max(1) {
        let mut next = vec![0.0; ns];
        let mut change: f64 = 0.0;
        for s in 0..ns {
            let mut payoff = vec![0.0; nu * nv];
            for u in 0..nu {
                for v in 0..nv {
                    let future: f64 = game.successors(s, u, v).iter().map(|&(n, p)| p * values[n]).sum();
                    payoff[u * nv + v] = game.reward(s, u, v) + phi * future;
                }
            }
            let sol = fictitious_play(&payoff, nu, nv, fp_rounds, fp_tol);
            next[s] = sol.value;
            strategies[s] = sol.strategy;
            change = change.max((next[s] - values[s]).abs());
        }
        values = next;
        if change < tol {
            break;
        }
    }
    MaximinSolution { values, strategies }
}

/// Laplace-smoothed empirical opponent policy, row-major `|S| × |V|`.
pub fn laplace_policy(counts: &SufficientStats) -> Vec<f64> {
    let (ns, nv) = (counts.num_states(), counts.num_actions());
    let totals = counts.state_totals();
    let mut out = vec![0.0; ns * nv];
    for s in 0..ns {
        for v in 0..nv {
            out[s * nv + v] = (f64::from(counts.get(s, v)) + 1.0) / (totals[s] as f64 + nv as f64);
        }
    }
    out
}

/// Best response to the smoothed empirical opponent, or a draw from the
/// maximin strategy of `state` while the average reward per step is below
/// that state's security level expressed per step, `(1 − φ) V(s)`.
#[allow(clippy::too_many_arguments)]
pub fn meta_strategy_select(
    game: &StochasticGame,
    state: usize,
    counts: &SufficientStats,
    accumulated_reward: f64,
    steps: u64,
    maximin: &MaximinSolution,
    tol: f64,
    uniform: f64,
) -> Result<usize> {
    check_index("state", state, game.num_states())?;
    if maximin.values.len() != game.num_states() {
        return Err(IbrlError::InvalidArgument("maximin table does not match the game".into()));
    }
    if steps > 0 {
        let average = accumulated_reward / steps as f64;
        if average < (1.0 - game.discount()) * maximin.values[state] {
            return Ok(sample_index(&maximin.strategies[state], uniform));
        }
    }
    let q = solve_mdp(game, &laplace_policy(counts), tol, None)?;
    Ok(q.greedy(state))
}
