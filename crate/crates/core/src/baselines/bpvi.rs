//! Bayesian value iteration with a myopic value-of-perfect-information bonus.

use rand::{Rng, RngCore};
use rayon::prelude::*;

use super::mdp::{opponent_policy, solve_mdp, QTable};
use crate::error::{check_index, IbrlError, Result};
use crate::game::StochasticGame;
use crate::opponent::{BehaviorModel, BehaviorParams, LikelihoodTable, ParticleSet, SufficientStats};
use crate::planner::{argmax, sample_index};

#[derive(Clone, Debug, PartialEq)]
pub struct BpviDecision {
    pub action: usize,
    pub mean_q: Vec<f64>,
    pub vpi: Vec<f64>,
}

/// Where BPVI's posterior draws come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PosteriorDraw {
    /// Particles resampled by their posterior weights.
    #[default]
    Particles,
    /// Exact conjugate draws when the model offers them; particles otherwise.
    Conjugate,
}

/// `m` posterior draws, by particle resampling or (if requested and
/// available) from the model's conjugate posterior.
#[allow(clippy::too_many_arguments)]
pub fn posterior_samples<R: Rng>(
    model: &dyn BehaviorModel,
    stats: &SufficientStats,
    particles: &ParticleSet,
    table: &LikelihoodTable,
    m: usize,
    draw: PosteriorDraw,
    rng: &mut R,
) -> Result<Vec<BehaviorParams>> {
    if m == 0 {
        return Err(IbrlError::InvalidArgument("BPVI needs at least one sample".into()));
    }
    let mut out = Vec::with_capacity(m);
    let mut weights: Option<Vec<f64>> = None;
    for _ in 0..m {
        if draw == PosteriorDraw::Conjugate {
            let rng_dyn: &mut dyn RngCore = rng;
            if let Some(p) = model.posterior_sample(stats, rng_dyn) {
                out.push(p);
                continue;
            }
        }
        if weights.is_none() {
            weights = Some(table.posterior_weights(stats)?);
        }
        let w = weights.as_ref().expect("computed above");
        let j = sample_index(w, rng.random::<f64>());
        out.push(particles.params()[j].clone());
    }
    Ok(out)
}

/// Myopic VPI per action from per-sample Q rows. For the best action the
/// gain is how far its sampled value falls below the runner-up's mean; for
/// the others it is how far the sampled value rises above the best mean.
pub fn myopic_vpi(samples: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let nu = samples.first().map_or(0, Vec::len);
    let m = samples.len() as f64;
    let mean: Vec<f64> = (0..nu).map(|u| samples.iter().map(|q| q[u]).sum::<f64>() / m).collect();
    if nu < 2 {
        return (mean, vec![0.0; nu]);
    }
    let (best, best_val) = argmax(mean.iter().copied());
    let second_val = argmax(mean.iter().enumerate().map(|(u, &q)| if u == best { f64::NEG_INFINITY } else { q })).1;
    let vpi = (0..nu)
        .map(|u| {
            samples
                .iter()
                .map(|q| {
                    if u == best {
                        (second_val - q[u]).max(0.0)
                    } else {
                        (q[u] - best_val).max(0.0)
                    }
                })
                .sum::<f64>()
                / m
        })
        .collect();
    (mean, vpi)
}

/// Solves one MDP per posterior draw (in parallel, collected in draw order).
pub fn bpvi_evaluate(
    game: &StochasticGame,
    model: &dyn BehaviorModel,
    samples: &[BehaviorParams],
    tol: f64,
) -> Result<Vec<QTable>> {
    samples
        .par_iter()
        .map(|lam| solve_mdp(game, &opponent_policy(model, lam)?, tol, None))
        .collect()
}

/// `argmax_u Q̄_s(u) + VPI_s(u)`, lowest index on ties.
#[allow(clippy::too_many_arguments)]
pub fn bpvi_select<R: Rng>(
    game: &StochasticGame,
    model: &dyn BehaviorModel,
    stats: &SufficientStats,
    particles: &ParticleSet,
    table: &LikelihoodTable,
    state: usize,
    m: usize,
    draw: PosteriorDraw,
    tol: f64,
    rng: &mut R,
) -> Result<BpviDecision> {
    check_index("state", state, game.num_states())?;
    let samples = posterior_samples(model, stats, particles, table, m, draw, rng)?;
    let tables = bpvi_evaluate(game, model, &samples, tol)?;
    Ok(bpvi_decide(&tables, state))
}

/// Decision from already-solved sample Q-tables.
pub fn bpvi_decide(tables: &[QTable], state: usize) -> BpviDecision {
    let rows: Vec<Vec<f64>> = tables.iter().map(|q| q.row(state).to_vec()).collect();
    let (mean_q, vpi) = myopic_vpi(&rows);
    let action = argmax(mean_q.iter().zip(&vpi).map(|(q, b)| q + b)).0;
    BpviDecision { action, mean_q, vpi }
}
