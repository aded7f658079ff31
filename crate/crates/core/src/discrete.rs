//! Indicator-basis planner: with `Ψ_i(λ) = 1[λ = λ^i]` the belief becomes a
//! discrete distribution over the particles and the problem a discrete
//! belief-state MDP, solved here by point-based α-vector backups.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{check_index, IbrlError, Result};
use crate::game::StochasticGame;
use crate::opponent::{BehaviorModel, LikelihoodTable, ParticleSet};
use crate::planner::{
    argmax, build_bundle, dot, sup_change, AlphaFunction, AlphaSet, BundleVariant, PlanMetadata, PlanMode,
    PlannerConfig, PolicyBundle, Provenance, SampledBeliefSet,
};

const SIMPLEX_TOL: f64 = 1e-12;
const DUPLICATE_TOL: f64 = 1e-12;

/// `b̂`: weights over the particles.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteBelief {
    weights: Vec<f64>,
}

impl DiscreteBelief {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(IbrlError::InvalidArgument("empty discrete belief".into()));
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(IbrlError::InvalidArgument("discrete belief is not on the simplex".into()));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, j: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[j] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `b̂'(λ^j) ∝ b̂(λ^j) p_s^v(λ^j)`.
pub fn discrete_belief_update(
    belief: &DiscreteBelief,
    table: &LikelihoodTable,
    state: usize,
    action: usize,
) -> Result<DiscreteBelief> {
    check_index("state", state, table.num_states())?;
    check_index("opponent action", action, table.num_actions())?;
    if belief.len() != table.num_particles() {
        return Err(IbrlError::InvalidArgument("belief and table disagree on particle count".into()));
    }
    let mut w: Vec<f64> = belief
        .weights
        .iter()
        .zip(table.row(state, action))
        .map(|(b, p)| b * p)
        .collect();
    let sum: f64 = w.iter().sum();
    if !(sum > 0.0) {
        return Err(IbrlError::DegenerateBelief);
    }
    w.iter_mut().for_each(|x| *x /= sum);
    Ok(DiscreteBelief { weights: w })
}

/// `φ_s^{ut}(j)` for every particle, with its action.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteAlphaVector {
    pub values: Vec<f64>,
    pub action: usize,
}

impl DiscreteAlphaVector {
    pub fn zero(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
            action: 0,
        }
    }
}

/// `φ_s^{ut}(j) = Σ_v p_s^v(λ^j) (r_s(u,v) + φ Σ_{s'} p_s^{uv}(s') φ_{s'}^{t_{s'v}}(j))`.
///
/// `choice[v * |S| + s']` indexes into `prev[s']`; entries for pairs without
/// transition mass are ignored.
pub fn discrete_backup(
    game: &StochasticGame,
    table: &LikelihoodTable,
    s: usize,
    u: usize,
    choice: &[usize],
    prev: &[Vec<DiscreteAlphaVector>],
) -> Result<DiscreteAlphaVector> {
    let (ns, nv, n) = (game.num_states(), game.num_opponent_actions(), table.num_particles());
    check_index("state", s, ns)?;
    check_index("agent action", u, game.num_agent_actions())?;
    if choice.len() != ns * nv || prev.len() != ns {
        return Err(IbrlError::InvalidArgument("choice vector or previous sets have the wrong size".into()));
    }
    let phi = game.discount();
    let mut values = vec![0.0; n];
    for (j, out) in values.iter_mut().enumerate() {
        let mut total = 0.0;
        for v in 0..nv {
            let mut future = 0.0;
            for &(next, p) in game.successors(s, u, v) {
                let t = choice[v * ns + next];
                let vec = prev[next]
                    .get(t)
                    .ok_or(IbrlError::IndexOutOfRange {
                        what: "choice",
                        index: t,
                        size: prev[next].len(),
                    })?;
                future += p * vec.values[j];
            }
            total += table.row(s, v)[j] * (game.reward(s, u, v) + phi * future);
        }
        *out = total;
    }
    Ok(DiscreteAlphaVector { values, action: u })
}

/// Point-based backup of one state's vectors over its discrete beliefs.
fn point_backup(
    game: &StochasticGame,
    table: &LikelihoodTable,
    s: usize,
    beliefs: &[DiscreteBelief],
    prev: &[Vec<DiscreteAlphaVector>],
) -> Result<Vec<DiscreteAlphaVector>> {
    let (ns, nu, nv) = (game.num_states(), game.num_agent_actions(), game.num_opponent_actions());
    let phi = game.discount();
    let per_belief = beliefs
        .par_iter()
        .map(|b| {
            let w = b.weights();
            // the best t per (v, s') does not depend on u
            let mut choice = vec![0usize; ns * nv];
            for v in 0..nv {
                let lik = table.row(s, v);
                for next in 0..ns {
                    let reachable = (0..nu).any(|u| game.transition_prob(s, u, v, next) > 0.0);
                    if reachable {
                        choice[v * ns + next] = argmax(prev[next].iter().map(|a| {
                            a.values
                                .iter()
                                .zip(lik)
                                .zip(w)
                                .map(|((x, p), wj)| wj * phi * p * x)
                                .sum::<f64>()
                        }))
                        .0;
                    }
                }
            }
            let candidates = (0..nu)
                .map(|u| discrete_backup(game, table, s, u, &choice, prev))
                .collect::<Result<Vec<_>>>()?;
            let (u, _) = argmax(candidates.iter().map(|a| dot(&a.values, w)));
            Ok((candidates.into_iter().nth(u).expect("u in range"), choice))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<DiscreteAlphaVector> = Vec::new();
    for (a, _) in per_belief {
        let dup = out.iter().any(|o| {
            o.action == a.action && o.values.iter().zip(&a.values).all(|(x, y)| (x - y).abs() <= DUPLICATE_TOL)
        });
        if !dup {
            out.push(a);
        }
    }
    Ok(out)
}

fn to_alpha_set(sets: &[Vec<DiscreteAlphaVector>]) -> AlphaSet {
    AlphaSet::from_states(
        sets.iter()
            .map(|set| {
                set.iter()
                    .map(|a| AlphaFunction {
                        evals: a.values.clone(),
                        action: a.action,
                        provenance: Provenance {
                            action: a.action,
                            choices: Vec::new(),
                        },
                        coeffs: None,
                        terms: a.values.len() as u64,
                    })
                    .collect()
            })
            .collect(),
    )
}

/// Output of [`plan_discrete`].
#[derive(Clone, Debug)]
pub struct DiscretePlan {
    pub bundle: PolicyBundle,
    pub sets: Vec<Vec<DiscreteAlphaVector>>,
    /// Seconds since planning started, after each sweep.
    pub sweep_seconds: Vec<f64>,
}

/// Point-based value iteration over discrete beliefs. The discrete beliefs
/// are the posterior weights of the sampled count vectors in `beliefs`, so
/// both planners see the same points.
pub fn plan_discrete(
    game: &StochasticGame,
    model: &dyn BehaviorModel,
    particles: &ParticleSet,
    table: &LikelihoodTable,
    beliefs: SampledBeliefSet,
    config: &PlannerConfig,
) -> Result<DiscretePlan> {
    if beliefs.num_states() != game.num_states() {
        return Err(IbrlError::InvalidArgument("belief set does not cover every state".into()));
    }
    let started = Instant::now();
    let n = particles.len();
    let discrete: Vec<Vec<DiscreteBelief>> = beliefs
        .states()
        .iter()
        .map(|bs| bs.iter().map(|b| DiscreteBelief::new(b.weights.clone())).collect())
        .collect::<Result<_>>()?;
    let mut sets = vec![vec![DiscreteAlphaVector::zero(n)]; game.num_states()];
    let mut sweep_log = Vec::new();
    let mut sweep_seconds = Vec::new();
    for _ in 0..config.horizon {
        let next = (0..game.num_states())
            .into_par_iter()
            .map(|s| point_backup(game, table, s, &discrete[s], &sets))
            .collect::<Result<Vec<_>>>()?;
        let change = sup_change(&to_alpha_set(&next), &to_alpha_set(&sets), &beliefs);
        sweep_log.push(change);
        sweep_seconds.push(started.elapsed().as_secs_f64());
        sets = next;
        if change < config.convergence_tol {
            break;
        }
    }
    let metadata = PlanMetadata {
        mode: PlanMode::PointBased,
        horizon: config.horizon as u32,
        sweeps: sweep_log.len() as u32,
        particle_seed: particles.seed(),
        belief_seed: config.belief_seed,
        per_state_count: config.per_state_count as u32,
        depth: config.depth as u32,
        rollouts: config.rollouts as u32,
        convergence_tol: config.convergence_tol,
        explosion_cap: config.explosion_cap as u64,
        carry_projected: false,
        sweep_log,
    };
    let bundle = build_bundle(
        BundleVariant::Indicator,
        game,
        model,
        particles,
        beliefs,
        &to_alpha_set(&sets),
        metadata,
    )?;
    Ok(DiscretePlan {
        bundle,
        sets,
        sweep_seconds,
    })
}

/// `max_α Σ_j b̂(λ^j) φ(j)`.
pub fn discrete_value(set: &[DiscreteAlphaVector], belief: &DiscreteBelief) -> f64 {
    argmax(set.iter().map(|a| dot(&a.values, belief.weights()))).1
}
