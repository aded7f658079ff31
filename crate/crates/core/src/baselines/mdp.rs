use crate::error::{IbrlError, Result};
use crate::game::StochasticGame;
use crate::opponent::{BehaviorModel, BehaviorParams};
use crate::planner::argmax;

/// Hard stop for value iteration; far beyond what any shipped discount needs.
const MAX_SWEEPS: usize = 1_000_000;

/// `Q_s(u)` of the MDP induced by a fixed opponent policy.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    num_agent_actions: usize,
    q: Vec<f64>,
    residuals: Vec<f64>,
}

impl QTable {
    pub fn num_states(&self) -> usize {
        self.q.len() / self.num_agent_actions
    }

    pub fn q(&self, s: usize, u: usize) -> f64 {
        self.q[s * self.num_agent_actions + u]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.q[s * self.num_agent_actions..(s + 1) * self.num_agent_actions]
    }

    pub fn value(&self, s: usize) -> f64 {
        argmax(self.row(s).iter().copied()).1
    }

    /// Greedy action, lowest index on ties.
    pub fn greedy(&self, s: usize) -> usize {
        argmax(self.row(s).iter().copied()).0
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.num_states()).map(|s| self.value(s)).collect()
    }

    /// Sup-norm change of the final sweep.
    pub fn residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(0.0)
    }

    /// Sup-norm change after every sweep.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }
}

/// `p_s^v(λ)` for every state, row-major `|S| × |V|`.
pub fn opponent_policy(model: &dyn BehaviorModel, params: &BehaviorParams) -> Result<Vec<f64>> {
    model.validate(params)?;
    let nv = model.num_actions();
    let mut out = vec![0.0; model.num_states() * nv];
    for (s, row) in out.chunks_mut(nv).enumerate() {
        model.action_probs(params, s, row);
    }
    Ok(out)
}

/// Value iteration against a fixed opponent policy (`|S| × |V|`), optionally
/// warm-started from state values.
pub fn solve_mdp(game: &StochasticGame, opponent: &[f64], tol: f64, warm_start: Option<&[f64]>) -> Result<QTable> {
    let (ns, nu, nv) = (game.num_states(), game.num_agent_actions(), game.num_opponent_actions());
    if opponent.len() != ns * nv {
        return Err(IbrlError::InvalidArgument("opponent policy has the wrong shape".into()));
    }
    if !(tol > 0.0) {
        return Err(IbrlError::InvalidArgument("tolerance must be positive".into()));
    }
    // Collapse the opponent: expected reward and successor mass per (s, u).
    let mut reward = vec![0.0; ns * nu];
    let mut succ: Vec<Vec<(usize, f64)>> = vec![Vec::new(); ns * nu];
    for s in 0..ns {
        for u in 0..nu {
            let mut row: Vec<(usize, f64)> = Vec::new();
            for v in 0..nv {
                let p = opponent[s * nv + v];
                if p <= 0.0 {
                    continue;
                }
                reward[s * nu + u] += p * game.reward(s, u, v);
                for &(next, q) in game.successors(s, u, v) {
                    match row.iter_mut().find(|(n, _)| *n == next) {
                        Some(e) => e.1 += p * q,
                        None => row.push((next, p * q)),
                    }
                }
            }
            succ[s * nu + u] = row;
        }
    }
    let phi = game.discount();
    let mut values = match warm_start {
        Some(v) if v.len() == ns => v.to_vec(),
        _ => vec![0.0; ns],
    };
    let mut q = vec![0.0; ns * nu];
    let mut residuals = Vec::new();
    for _ in 0..MAX_SWEEPS {
        let mut change: f64 = 0.0;
        for i in 0..ns * nu {
            let future: f64 = succ[i].iter().map(|&(n, p)| p * values[n]).sum();
            let new = reward[i] + phi * future;
            change = change.max((new - q[i]).abs());
            q[i] = new;
        }
        for (s, v) in values.iter_mut().enumerate() {
            *v = q[s * nu..(s + 1) * nu].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
        residuals.push(change);
        if change <= tol {
            break;
        }
    }
    Ok(QTable {
        num_agent_actions: nu,
        q,
        residuals,
    })
}

/// Solves the MDP the game becomes once the opponent's `λ` is known.
pub fn value_iteration(
    game: &StochasticGame,
    model: &dyn BehaviorModel,
    params: &BehaviorParams,
    tol: f64,
) -> Result<QTable> {
    if model.num_states() != game.num_states() || model.num_actions() != game.num_opponent_actions() {
        return Err(IbrlError::InvalidArgument("model does not match game dimensions".into()));
    }
    solve_mdp(game, &opponent_policy(model, params)?, tol, None)
}
