use std::time::Instant;

use log::{debug, info};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::alpha::{AlphaFunction, AlphaSet};
use super::backup::{exact_backup_pruned, pb_backup, BackupContext, DEFAULT_EXPLOSION_CAP};
use super::belief::{sample_reachable_beliefs, BeliefSamplingConfig, SampledBeliefSet};
use super::bundle::{BundleVariant, PlanMetadata, PlanMode, PolicyBundle, StatePolicy};
use super::projection::{reconstruct, ProjectionSystem};
use crate::error::{IbrlError, Result};
use crate::game::StochasticGame;
use crate::opponent::{BehaviorModel, LikelihoodTable, ParticleSet};

#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    pub mode: PlanMode,
    pub horizon: usize,
    /// Upper bound on `|B_s|`, prior included.
    pub per_state_count: usize,
    /// Length of the simulated histories used to sample beliefs.
    pub depth: usize,
    pub rollouts: usize,
    pub belief_seed: u64,
    pub explosion_cap: usize,
    /// Stop once the sup-change over sampled beliefs falls below this.
    pub convergence_tol: f64,
    /// Replace each α by its projection before the next sweep instead of
    /// carrying the exact particle evaluations.
    pub carry_projected: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            mode: PlanMode::PointBased,
            horizon: 60,
            per_state_count: 16,
            depth: 20,
            rollouts: 500,
            belief_seed: 0,
            explosion_cap: DEFAULT_EXPLOSION_CAP,
            convergence_tol: 1e-6,
            carry_projected: false,
        }
    }
}

impl PlannerConfig {
    pub fn sampling(&self) -> BeliefSamplingConfig {
        BeliefSamplingConfig {
            per_state_count: self.per_state_count,
            depth: self.depth,
            rollouts: self.rollouts,
        }
    }
}

/// A finished plan: the bundle plus the final α-sets with their particle
/// evaluations.
#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub bundle: PolicyBundle,
    pub alphas: AlphaSet,
    /// Wall-clock seconds since planning started, recorded after each sweep.
    /// Kept out of the bundle so bundles stay reproducible.
    pub sweep_seconds: Vec<f64>,
}

/// One sweep over all states. States are backed up in parallel; the result
/// is collected in state order.
pub fn sweep(
    ctx: &BackupContext<'_>,
    beliefs: &SampledBeliefSet,
    prev: &AlphaSet,
    mode: PlanMode,
    cap: usize,
) -> Result<AlphaSet> {
    let per_state = (0..ctx.game().num_states())
        .into_par_iter()
        .map(|s| match mode {
            PlanMode::Exact => exact_backup_pruned(ctx, s, prev, cap),
            PlanMode::PointBased => pb_backup(ctx, s, beliefs.state(s), prev),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AlphaSet::from_states(per_state))
}

/// Attaches projection coefficients to every α.
pub fn project_set(alphas: &mut AlphaSet, beliefs: &SampledBeliefSet, systems: &[ProjectionSystem]) -> Result<()> {
    let mut states = std::mem::replace(alphas, AlphaSet::from_states(Vec::new())).into_states();
    states
        .par_iter_mut()
        .enumerate()
        .try_for_each(|(s, set)| -> Result<()> {
            for a in set.iter_mut() {
                let p = systems[s].project(&a.evals, beliefs.state(s))?;
                a.coeffs = Some(p.coeffs);
            }
            Ok(())
        })?;
    *alphas = AlphaSet::from_states(states);
    Ok(())
}

/// `sup_{s, b ∈ B_s} |V'(b) − V(b)|`.
pub fn sup_change(next: &AlphaSet, prev: &AlphaSet, beliefs: &SampledBeliefSet) -> f64 {
    (0..next.num_states())
        .map(|s| {
            beliefs
                .state(s)
                .iter()
                .map(|b| (next.value(s, &b.weights) - prev.value(s, &b.weights)).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Samples beliefs, then plans.
pub fn plan(
    game: &StochasticGame,
    model: &dyn BehaviorModel,
    particles: &ParticleSet,
    config: &PlannerConfig,
) -> Result<PlanOutcome> {
    let table = LikelihoodTable::build(model, particles)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.belief_seed);
    let beliefs = sample_reachable_beliefs(game, model, &table, &config.sampling(), &mut rng)?;
    plan_with_beliefs(game, model, particles, &table, beliefs, config)
}

/// Runs up to `horizon` sweeps from the zero α-sets over a fixed belief set.
pub fn plan_with_beliefs(
    game: &StochasticGame,
    model: &dyn BehaviorModel,
    particles: &ParticleSet,
    table: &LikelihoodTable,
    beliefs: SampledBeliefSet,
    config: &PlannerConfig,
) -> Result<PlanOutcome> {
    if beliefs.num_states() != game.num_states() {
        return Err(IbrlError::InvalidArgument("belief set does not cover every state".into()));
    }
    let started = Instant::now();
    let ctx = BackupContext::new(game, table)?;
    let systems = beliefs
        .states()
        .par_iter()
        .map(|b| ProjectionSystem::new(b))
        .collect::<Result<Vec<_>>>()?;
    let n = particles.len();
    let mut alphas = AlphaSet::zero(game.num_states(), n);
    let mut sweep_log = Vec::new();
    let mut sweep_seconds = Vec::new();
    for k in 0..config.horizon {
        let mut next = sweep(&ctx, &beliefs, &alphas, config.mode, config.explosion_cap)?;
        if config.mode == PlanMode::PointBased {
            project_set(&mut next, &beliefs, &systems)?;
            if config.carry_projected {
                carry_projections(&mut next, &beliefs);
            }
        }
        let change = sup_change(&next, &alphas, &beliefs);
        debug!(
            "sweep {}: sup-change {change:.3e}, {} α-functions",
            k + 1,
            next.total_size()
        );
        sweep_log.push(change);
        sweep_seconds.push(started.elapsed().as_secs_f64());
        alphas = next;
        if change < config.convergence_tol {
            info!("converged after {} sweeps", k + 1);
            break;
        }
    }
    // exact-mode sets (and the k = 0 zero sets) still need coefficients
    project_set(&mut alphas, &beliefs, &systems)?;

    let metadata = PlanMetadata {
        mode: config.mode,
        horizon: config.horizon as u32,
        sweeps: sweep_log.len() as u32,
        particle_seed: particles.seed(),
        belief_seed: config.belief_seed,
        per_state_count: config.per_state_count as u32,
        depth: config.depth as u32,
        rollouts: config.rollouts as u32,
        convergence_tol: config.convergence_tol,
        explosion_cap: config.explosion_cap as u64,
        carry_projected: config.carry_projected,
        sweep_log,
    };
    let bundle = build_bundle(BundleVariant::PhiBasis, game, model, particles, beliefs, &alphas, metadata)?;
    Ok(PlanOutcome {
        bundle,
        alphas,
        sweep_seconds,
    })
}

fn carry_projections(alphas: &mut AlphaSet, beliefs: &SampledBeliefSet) {
    let mut states = std::mem::replace(alphas, AlphaSet::from_states(Vec::new())).into_states();
    for (s, set) in states.iter_mut().enumerate() {
        for a in set.iter_mut() {
            if let Some(c) = &a.coeffs {
                a.evals = reconstruct(c, beliefs.state(s));
            }
        }
    }
    *alphas = AlphaSet::from_states(states);
}

/// Packs α-sets into a bundle. `PhiBasis` stores each α's coefficients,
/// `Indicator` its particle evaluations.
pub fn build_bundle(
    variant: BundleVariant,
    game: &StochasticGame,
    model: &dyn BehaviorModel,
    particles: &ParticleSet,
    beliefs: SampledBeliefSet,
    alphas: &AlphaSet,
    metadata: PlanMetadata,
) -> Result<PolicyBundle> {
    let policies = alphas
        .states()
        .iter()
        .enumerate()
        .map(|(s, set)| {
            let width = match variant {
                BundleVariant::PhiBasis => beliefs.state(s).len(),
                BundleVariant::Indicator => particles.len(),
            };
            let mut coeffs = Vec::with_capacity(set.len() * width);
            for a in set {
                coeffs.extend_from_slice(row_of(a, variant)?);
            }
            Ok(StatePolicy {
                actions: set.iter().map(|a| a.action).collect(),
                width,
                coeffs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let descriptor = model.descriptor();
    let bundle = PolicyBundle {
        variant,
        game_hash: game.descriptor_hash(),
        model_name: descriptor.name,
        num_states: game.num_states(),
        num_agent_actions: game.num_agent_actions(),
        num_opponent_actions: game.num_opponent_actions(),
        param_dim: descriptor.param_dim,
        particles: particles.clone(),
        beliefs,
        policies,
        metadata,
    };
    bundle.validate()?;
    Ok(bundle)
}

fn row_of(a: &AlphaFunction, variant: BundleVariant) -> Result<&[f64]> {
    match variant {
        BundleVariant::PhiBasis => a
            .coeffs
            .as_deref()
            .ok_or_else(|| IbrlError::InvalidArgument("α-function has not been projected".into())),
        BundleVariant::Indicator => Ok(&a.evals),
    }
}
