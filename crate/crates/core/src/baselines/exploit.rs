use log::warn;

use super::mdp::value_iteration;
use crate::error::{check_index, Result};
use crate::game::StochasticGame;
use crate::opponent::{BehaviorModel, BehaviorParams, LikelihoodTable, ParticleSet, SufficientStats};

/// Which point estimate of `λ` the Exploit agent acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointEstimate {
    PriorMean,
    /// Particle-weighted posterior mean.
    PosteriorMean,
}

/// `λ̂`, clamped into range (with a warning) if averaging left it invalid.
pub fn point_estimate(
    model: &dyn BehaviorModel,
    kind: PointEstimate,
    stats: &SufficientStats,
    particles: &ParticleSet,
    table: &LikelihoodTable,
) -> Result<BehaviorParams> {
    let estimate = match kind {
        PointEstimate::PriorMean => model.prior_mean(),
        PointEstimate::PosteriorMean => {
            let w = table.posterior_weights(stats)?;
            let dim = particles.params()[0].len();
            let mut mean = vec![0.0; dim];
            for (wj, p) in w.iter().zip(particles.iter()) {
                for (m, x) in mean.iter_mut().zip(&p.0) {
                    *m += wj * x;
                }
            }
            BehaviorParams(mean)
        }
    };
    if model.validate(&estimate).is_err() {
        warn!("point estimate out of range; clamping");
        return Ok(model.clamp(&estimate));
    }
    Ok(estimate)
}

/// Greedy action of the MDP solved at `λ̂`.
#[allow(clippy::too_many_arguments)]
pub fn exploit_select(
    game: &StochasticGame,
    model: &dyn BehaviorModel,
    kind: PointEstimate,
    stats: &SufficientStats,
    particles: &ParticleSet,
    table: &LikelihoodTable,
    state: usize,
    tol: f64,
) -> Result<usize> {
    check_index("state", state, game.num_states())?;
    let lam = point_estimate(model, kind, stats, particles, table)?;
    Ok(value_iteration(game, model, &lam, tol)?.greedy(state))
}

/// Greedy action of the MDP solved at the true `λ`.
pub fn oracle_select(
    game: &StochasticGame,
    model: &dyn BehaviorModel,
    true_params: &BehaviorParams,
    state: usize,
    tol: f64,
) -> Result<usize> {
    check_index("state", state, game.num_states())?;
    Ok(value_iteration(game, model, true_params, tol)?.greedy(state))
}
