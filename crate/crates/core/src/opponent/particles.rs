use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{normalize_log_weights, BehaviorModel, BehaviorParams, SufficientStats};
use crate::error::{check_index, IbrlError, Result};

/// Prior draws `{λ^j}` used for every Monte-Carlo integral.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet {
    params: Vec<BehaviorParams>,
    seed: u64,
}

impl ParticleSet {
    pub fn new(params: Vec<BehaviorParams>, seed: u64) -> Self {
        Self { params, seed }
    }

    /// Draws `n` particles from the model prior.
    pub fn draw(model: &dyn BehaviorModel, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(IbrlError::InvalidArgument("particle count must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = (0..n).map(|_| model.prior_sample(&mut rng)).collect();
        Ok(Self { params, seed })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &[BehaviorParams] {
        &self.params
    }

    pub fn iter(&self) -> impl Iterator<Item = &BehaviorParams> {
        self.params.iter()
    }

    pub fn validate(&self, model: &dyn BehaviorModel) -> Result<()> {
        if self.params.is_empty() {
            return Err(IbrlError::InvalidArgument("empty particle set".into()));
        }
        self.params.iter().try_for_each(|p| model.validate(p))
    }
}

/// `p_s^v(λ^j)` for every state, action and particle, laid out so that the
/// particle axis is contiguous for a fixed `(s, v)`.
#[derive(Clone, Debug)]
pub struct LikelihoodTable {
    num_states: usize,
    num_actions: usize,
    num_particles: usize,
    lik: Vec<f64>,
    log_lik: Vec<f64>,
}

impl LikelihoodTable {
    pub fn build(model: &dyn BehaviorModel, particles: &ParticleSet) -> Result<Self> {
        particles.validate(model)?;
        let (ns, nv, n) = (model.num_states(), model.num_actions(), particles.len());
        let mut lik = vec![0.0; ns * nv * n];
        let mut row = vec![0.0; nv];
        for (j, lam) in particles.iter().enumerate() {
            for s in 0..ns {
                model.action_probs(lam, s, &mut row);
                for v in 0..nv {
                    lik[(s * nv + v) * n + j] = row[v];
                }
            }
        }
        let log_lik = lik
            .iter()
            .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
            .collect();
        Ok(Self {
            num_states: ns,
            num_actions: nv,
            num_particles: n,
            lik,
            log_lik,
        })
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_particles(&self) -> usize {
        self.num_particles
    }

    /// `p_s^v(λ^j)` over all particles `j`.
    #[inline]
    pub fn row(&self, state: usize, action: usize) -> &[f64] {
        let start = (state * self.num_actions + action) * self.num_particles;
        &self.lik[start..start + self.num_particles]
    }

    #[inline]
    pub fn log_row(&self, state: usize, action: usize) -> &[f64] {
        let start = (state * self.num_actions + action) * self.num_particles;
        &self.log_lik[start..start + self.num_particles]
    }

    /// `ln Φ(λ^j)` for every particle.
    pub fn log_phi(&self, stats: &SufficientStats) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.num_particles];
        for (s, v, c) in stats.iter() {
            check_index("state", s, self.num_states)?;
            check_index("opponent action", v, self.num_actions)?;
            let c = f64::from(c);
            for (acc, &l) in out.iter_mut().zip(self.log_row(s, v)) {
                *acc += c * l;
            }
        }
        Ok(out)
    }

    /// Posterior weights over particles for counts `ψ`.
    pub fn posterior_weights(&self, stats: &SufficientStats) -> Result<Vec<f64>> {
        normalize_log_weights(&self.log_phi(stats)?)
    }
}
