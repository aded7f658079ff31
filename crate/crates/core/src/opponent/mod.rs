//! Parametric opponent models.
//!
//! A [`BehaviorModel`] maps opponent parameters `λ` to per-state action
//! distributions `p_s^v(λ)` and can draw `λ` from its prior. Beliefs are never
//! represented as densities: the posterior after observations `ψ` is
//! `Φ(λ)·b(λ)` with `Φ(λ) = ∏ p_s^v(λ)^{ψ_s^v}`, and every integral against it
//! is estimated from a fixed set of prior particles.

mod fdm;
mod particles;
mod stats;

pub use fdm::FdmModel;
pub use particles::{LikelihoodTable, ParticleSet};
pub use stats::{update_counts, SufficientStats};

use rand::RngCore;

use crate::error::{check_index, IbrlError, Result};

/// Opaque parameter vector `λ`; each model defines its own layout and ranges.
#[derive(Clone, Debug, PartialEq)]
pub struct BehaviorParams(pub Vec<f64>);

impl BehaviorParams {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelDescriptor {
    pub name: String,
    pub param_dim: usize,
}

pub trait BehaviorModel: Send + Sync {
    fn descriptor(&self) -> ModelDescriptor;

    /// Number of (information) states the model is defined over.
    fn num_states(&self) -> usize;

    fn num_actions(&self) -> usize;

    fn validate(&self, params: &BehaviorParams) -> Result<()>;

    /// Writes `p_s^·(λ)` into `out` (length `num_actions`). `params` must
    /// already be valid and `state` in range.
    fn action_probs(&self, params: &BehaviorParams, state: usize, out: &mut [f64]);

    fn prior_sample(&self, rng: &mut dyn RngCore) -> BehaviorParams;

    /// Prior mean of `λ` (analytic where available).
    fn prior_mean(&self) -> BehaviorParams;

    /// Projects `params` onto the valid range.
    fn clamp(&self, params: &BehaviorParams) -> BehaviorParams;

    /// Exact posterior draw for conjugate models; `None` otherwise.
    fn posterior_sample(
        &self,
        _stats: &SufficientStats,
        _rng: &mut dyn RngCore,
    ) -> Option<BehaviorParams> {
        None
    }
}

/// `p_s^v(λ)`.
pub fn likelihood(
    model: &dyn BehaviorModel,
    params: &BehaviorParams,
    state: usize,
    action: usize,
) -> Result<f64> {
    model.validate(params)?;
    check_index("state", state, model.num_states())?;
    check_index("opponent action", action, model.num_actions())?;
    let mut out = vec![0.0; model.num_actions()];
    model.action_probs(params, state, &mut out);
    Ok(out[action])
}

/// `ln Φ(λ)`; `-∞` when an observed pair has zero likelihood.
pub fn log_phi(model: &dyn BehaviorModel, stats: &SufficientStats, params: &BehaviorParams) -> Result<f64> {
    model.validate(params)?;
    let mut probs = vec![0.0; model.num_actions()];
    let mut last_state = usize::MAX;
    let mut acc = 0.0;
    for (s, v, c) in stats.iter() {
        check_index("state", s, model.num_states())?;
        if s != last_state {
            model.action_probs(params, s, &mut probs);
            last_state = s;
        }
        let p = probs[v];
        if p <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        acc += f64::from(c) * p.ln();
    }
    Ok(acc)
}

/// `Φ(λ) = ∏_s ∏_v p_s^v(λ)^{ψ_s^v}`, accumulated in log space.
pub fn phi_eval(model: &dyn BehaviorModel, stats: &SufficientStats, params: &BehaviorParams) -> Result<f64> {
    Ok(log_phi(model, stats, params)?.exp())
}

/// Normalizes log-weights into a probability vector.
pub fn normalize_log_weights(log_w: &[f64]) -> Result<Vec<f64>> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(IbrlError::DegenerateBelief);
    }
    let mut w: Vec<f64> = log_w.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = w.iter().sum();
    for x in &mut w {
        *x /= sum;
    }
    Ok(w)
}

/// Self-normalized importance weights `Φ(λ^j) / Σ_k Φ(λ^k)`.
pub fn posterior_weights(
    model: &dyn BehaviorModel,
    stats: &SufficientStats,
    particles: &ParticleSet,
) -> Result<Vec<f64>> {
    if particles.is_empty() {
        return Err(IbrlError::InvalidArgument("empty particle set".into()));
    }
    let log_w = particles
        .iter()
        .map(|p| log_phi(model, stats, p))
        .collect::<Result<Vec<_>>>()?;
    normalize_log_weights(&log_w)
}
