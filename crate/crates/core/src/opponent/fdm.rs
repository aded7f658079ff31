use rand::RngCore;
use rand_distr::{Distribution, Gamma};

use super::{BehaviorModel, BehaviorParams, ModelDescriptor, SufficientStats};
use crate::error::{IbrlError, Result};

const ROW_TOL: f64 = 1e-9;

/// Independent multinomials `θ_s` per state with Dirichlet priors
/// `Dir({n_s^v}_v)`. `λ` is the row-major `|S|×|V|` table of `θ_s^v`.
#[derive(Clone, Debug)]
pub struct FdmModel {
    name: String,
    num_states: usize,
    num_actions: usize,
    concentration: Vec<f64>,
}

impl FdmModel {
    pub fn new(name: &str, num_states: usize, num_actions: usize, concentration: Vec<f64>) -> Result<Self> {
        if concentration.len() != num_states * num_actions {
            return Err(IbrlError::InvalidArgument("concentration table size".into()));
        }
        if concentration.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(IbrlError::InvalidArgument("Dirichlet concentrations must be positive".into()));
        }
        Ok(Self {
            name: name.to_string(),
            num_states,
            num_actions,
            concentration,
        })
    }

    /// Same concentration `n` for every entry.
    pub fn symmetric(name: &str, num_states: usize, num_actions: usize, n: f64) -> Result<Self> {
        Self::new(name, num_states, num_actions, vec![n; num_states * num_actions])
    }

    pub fn concentration(&self, state: usize, action: usize) -> f64 {
        self.concentration[state * self.num_actions + action]
    }

    fn dirichlet_row(&self, alphas: &[f64], rng: &mut dyn RngCore, out: &mut [f64]) {
        loop {
            let mut sum = 0.0;
            for (o, &a) in out.iter_mut().zip(alphas) {
                *o = Gamma::new(a, 1.0).expect("positive shape").sample(rng);
                sum += *o;
            }
            // Tiny shapes can underflow every coordinate; redraw in that case.
            if sum > 0.0 {
                for o in out.iter_mut() {
                    *o /= sum;
                }
                return;
            }
        }
    }

    fn sample_with(&self, stats: Option<&SufficientStats>, rng: &mut dyn RngCore) -> BehaviorParams {
        let nv = self.num_actions;
        let mut theta = vec![0.0; self.num_states * nv];
        let mut alphas = vec![0.0; nv];
        for s in 0..self.num_states {
            for v in 0..nv {
                alphas[v] = self.concentration(s, v) + stats.map_or(0.0, |st| f64::from(st.get(s, v)));
            }
            self.dirichlet_row(&alphas, rng, &mut theta[s * nv..(s + 1) * nv]);
        }
        BehaviorParams(theta)
    }
}

impl BehaviorModel for FdmModel {
    fn descriptor(&self) -> ModelDescriptor {
        ModelDescriptor {
            name: self.name.clone(),
            param_dim: self.num_states * self.num_actions,
        }
    }

    fn num_states(&self) -> usize {
        self.num_states
    }

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    fn validate(&self, params: &BehaviorParams) -> Result<()> {
        if params.len() != self.num_states * self.num_actions {
            return Err(IbrlError::Domain(format!(
                "expected {} multinomial entries, got {}",
                self.num_states * self.num_actions,
                params.len()
            )));
        }
        for (s, row) in params.0.chunks(self.num_actions).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > ROW_TOL {
                return Err(IbrlError::Domain(format!("θ_{s} is not a distribution")));
            }
        }
        Ok(())
    }

    fn action_probs(&self, params: &BehaviorParams, state: usize, out: &mut [f64]) {
        let nv = self.num_actions;
        out.copy_from_slice(&params.0[state * nv..(state + 1) * nv]);
    }

    fn prior_sample(&self, rng: &mut dyn RngCore) -> BehaviorParams {
        self.sample_with(None, rng)
    }

    fn prior_mean(&self) -> BehaviorParams {
        let nv = self.num_actions;
        let mut theta = self.concentration.clone();
        for row in theta.chunks_mut(nv) {
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|x| *x /= sum);
        }
        BehaviorParams(theta)
    }

    fn clamp(&self, params: &BehaviorParams) -> BehaviorParams {
        let nv = self.num_actions;
        let mut theta: Vec<f64> = params.0.iter().map(|p| p.max(0.0)).collect();
        theta.resize(self.num_states * nv, 0.0);
        for row in theta.chunks_mut(nv) {
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                row.iter_mut().for_each(|x| *x /= sum);
            } else {
                row.iter_mut().for_each(|x| *x = 1.0 / nv as f64);
            }
        }
        BehaviorParams(theta)
    }

    fn posterior_sample(&self, stats: &SufficientStats, rng: &mut dyn RngCore) -> Option<BehaviorParams> {
        Some(self.sample_with(Some(stats), rng))
    }
}
