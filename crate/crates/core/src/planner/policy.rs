//! Online action selection from a [`PolicyBundle`].
//!
//! Each α is scored at the current posterior as
//! `Σ_j Φ(λ^j) α̂(λ^j) / Σ_j Φ(λ^j)`, where `α̂(λ^j) = Σ_i c_i Φ_s^i(λ^j)` is
//! tabulated once when the policy is loaded. Selection therefore costs
//! `O(|Γ_s| n)` plus the `O(n)` posterior update.

use log::warn;

use super::alpha::dot;
use super::bundle::{BundleVariant, PolicyBundle};
use super::projection::reconstruct;
use crate::error::{check_index, IbrlError, Result};
use crate::game::StochasticGame;
use crate::opponent::{normalize_log_weights, BehaviorModel, LikelihoodTable, SufficientStats};

#[derive(Clone, Debug)]
pub struct Policy {
    game_hash: [u8; 32],
    num_particles: usize,
    table: LikelihoodTable,
    /// Per state, row-major `|Γ_s| × n` reconstructed evaluations.
    evals: Vec<Vec<f64>>,
    actions: Vec<Vec<usize>>,
    prior_weights: Vec<f64>,
}

/// Running `ln Φ(λ^j)` for the current episode.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefTracker {
    log_phi: Vec<f64>,
    observations: u64,
}

impl BeliefTracker {
    pub fn log_phi(&self) -> &[f64] {
        &self.log_phi
    }

    pub fn observations(&self) -> u64 {
        self.observations
    }
}

impl Policy {
    pub fn new(bundle: &PolicyBundle, model: &dyn BehaviorModel) -> Result<Self> {
        bundle.validate()?;
        let descriptor = model.descriptor();
        if descriptor.name != bundle.model_name
            || descriptor.param_dim != bundle.param_dim
            || model.num_states() != bundle.num_states
            || model.num_actions() != bundle.num_opponent_actions
        {
            return Err(IbrlError::Bundle(format!(
                "bundle was planned for model {:?}, not {:?}",
                bundle.model_name, descriptor.name
            )));
        }
        let n = bundle.num_particles();
        let table = LikelihoodTable::build(model, &bundle.particles)?;
        let evals = bundle
            .policies
            .iter()
            .zip(bundle.beliefs.states())
            .map(|(policy, beliefs)| {
                let mut out = Vec::with_capacity(policy.len() * n);
                for i in 0..policy.len() {
                    match bundle.variant {
                        BundleVariant::PhiBasis => out.extend(reconstruct(policy.row(i), beliefs)),
                        BundleVariant::Indicator => out.extend_from_slice(policy.row(i)),
                    }
                }
                out
            })
            .collect();
        Ok(Self {
            game_hash: bundle.game_hash,
            num_particles: n,
            table,
            evals,
            actions: bundle.policies.iter().map(|p| p.actions.clone()).collect(),
            prior_weights: vec![1.0 / n as f64; n],
        })
    }

    /// Fails unless the bundle was planned for exactly this game.
    pub fn check_game(&self, game: &StochasticGame) -> Result<()> {
        if game.descriptor_hash() != self.game_hash {
            return Err(IbrlError::Bundle(format!(
                "bundle was planned for a different game than {:?}",
                game.name()
            )));
        }
        Ok(())
    }

    pub fn num_particles(&self) -> usize {
        self.num_particles
    }

    pub fn num_alphas(&self, state: usize) -> usize {
        self.actions[state].len()
    }

    pub fn tracker(&self) -> BeliefTracker {
        BeliefTracker {
            log_phi: vec![0.0; self.num_particles],
            observations: 0,
        }
    }

    /// Folds one opponent observation into the tracker.
    pub fn observe(&self, tracker: &mut BeliefTracker, state: usize, action: usize) -> Result<()> {
        check_index("state", state, self.table.num_states())?;
        check_index("opponent action", action, self.table.num_actions())?;
        for (acc, l) in tracker.log_phi.iter_mut().zip(self.table.log_row(state, action)) {
            *acc += l;
        }
        tracker.observations += 1;
        Ok(())
    }

    /// Normalized `Φ` weights, or the prior weights (with a warning) when no
    /// particle explains the observations.
    pub fn weights_from_log_phi(&self, log_phi: &[f64]) -> Vec<f64> {
        match normalize_log_weights(log_phi) {
            Ok(w) => w,
            Err(_) => {
                warn!("belief degenerate; scoring with the prior weights");
                self.prior_weights.clone()
            }
        }
    }

    /// Eq-17 score of every α in `Γ_state` at the given particle weights.
    pub fn scores(&self, state: usize, weights: &[f64]) -> Vec<f64> {
        let n = self.num_particles;
        self.evals[state].chunks_exact(n).map(|row| dot(row, weights)).collect()
    }

    /// Action tag of the best-scoring α; among exact ties the lowest action.
    pub fn select_with_weights(&self, state: usize, weights: &[f64]) -> usize {
        let n = self.num_particles;
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for (row, &u) in self.evals[state].chunks_exact(n).zip(&self.actions[state]) {
            let score = dot(row, weights);
            if score > best.0 || (score == best.0 && u < best.1) {
                best = (score, u);
            }
        }
        best.1
    }

    pub fn select_tracked(&self, tracker: &BeliefTracker, state: usize) -> Result<usize> {
        check_index("state", state, self.evals.len())?;
        let w = self.weights_from_log_phi(&tracker.log_phi);
        Ok(self.select_with_weights(state, &w))
    }

    /// Action for counts `ψ` in `state`.
    pub fn select_action(&self, stats: &SufficientStats, state: usize) -> Result<usize> {
        check_index("state", state, self.evals.len())?;
        let log_phi = self.table.log_phi(stats)?;
        let w = self.weights_from_log_phi(&log_phi);
        Ok(self.select_with_weights(state, &w))
    }
}
