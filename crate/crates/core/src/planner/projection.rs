//! Least-squares projection of an α-function onto a state's belief basis
//! `{Φ_s^i}`, matched at the sampled beliefs.
//!
//! With `M_ik = ⟨Φ_s^i, b_s^k⟩` and `y_k = ⟨α, b_s^k⟩`, the coefficients minimize
//! `J(c) = Σ_k (Σ_i c_i M_ik − y_k)²`, i.e. solve `A c = d` with `A = M Mᵀ`,
//! `d = M y`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::backup::belief_value;
use super::belief::SampledBelief;
use crate::error::{IbrlError, Result};

pub const RIDGE_SCALE: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct ProjectionSystem {
    /// `M_ik`, rows indexed by basis function, columns by belief.
    basis_at_beliefs: DMatrix<f64>,
    gram: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
    /// Zero when `A` factored without regularization.
    ridge: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    pub coeffs: Vec<f64>,
    /// `J` at the solution.
    pub residual: f64,
}

impl ProjectionSystem {
    pub fn new(beliefs: &[SampledBelief]) -> Result<Self> {
        if beliefs.is_empty() {
            return Err(IbrlError::InvalidArgument("projection needs at least one belief".into()));
        }
        let m = beliefs.len();
        let mut basis = DMatrix::zeros(m, m);
        for (i, bi) in beliefs.iter().enumerate() {
            for (k, bk) in beliefs.iter().enumerate() {
                basis[(i, k)] = belief_value(&bi.phi_evals, bk);
            }
        }
        let gram = &basis * basis.transpose();
        let (factor, ridge) = match Cholesky::new(gram.clone()) {
            Some(f) => (f, 0.0),
            None => {
                let trace = gram.trace();
                let mut eps = RIDGE_SCALE * trace / m as f64;
                if !(eps > 0.0) {
                    eps = RIDGE_SCALE;
                }
                loop {
                    let shifted = &gram + DMatrix::identity(m, m) * eps;
                    if let Some(f) = Cholesky::new(shifted) {
                        break (f, eps);
                    }
                    eps *= 10.0;
                }
            }
        };
        Ok(Self {
            basis_at_beliefs: basis,
            gram,
            factor,
            ridge,
        })
    }

    pub fn len(&self) -> usize {
        self.gram.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `A = M Mᵀ`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `M_ik = ⟨Φ_s^i, b_s^k⟩`.
    pub fn basis_at_beliefs(&self) -> &DMatrix<f64> {
        &self.basis_at_beliefs
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// `d = M y` for target values `y_k` at the beliefs.
    pub fn rhs(&self, targets: &[f64]) -> DVector<f64> {
        &self.basis_at_beliefs * DVector::from_column_slice(targets)
    }

    /// `J(c)` for target values `y`.
    pub fn objective(&self, coeffs: &[f64], targets: &[f64]) -> f64 {
        let fitted = self.basis_at_beliefs.transpose() * DVector::from_column_slice(coeffs);
        fitted
            .iter()
            .zip(targets)
            .map(|(f, y)| (f - y) * (f - y))
            .sum()
    }

    /// Coefficients matching `targets` (values at the beliefs).
    pub fn solve(&self, targets: &[f64]) -> Result<Projection> {
        if targets.len() != self.len() {
            return Err(IbrlError::InvalidArgument(format!(
                "{} target values for {} beliefs",
                targets.len(),
                self.len()
            )));
        }
        let x = self.factor.solve(&self.rhs(targets));
        let coeffs: Vec<f64> = x.iter().copied().collect();
        let residual = self.objective(&coeffs, targets);
        Ok(Projection { coeffs, residual })
    }

    /// Projects an α-function given by its particle evaluations.
    pub fn project(&self, evals: &[f64], beliefs: &[SampledBelief]) -> Result<Projection> {
        if beliefs.len() != self.len() {
            return Err(IbrlError::InvalidArgument("belief list does not match the system".into()));
        }
        let targets: Vec<f64> = beliefs.iter().map(|b| belief_value(evals, b)).collect();
        self.solve(&targets)
    }
}

/// One-shot projection; repeated projections onto the same beliefs should
/// reuse a [`ProjectionSystem`].
pub fn project_alpha(evals: &[f64], beliefs: &[SampledBelief]) -> Result<Projection> {
    ProjectionSystem::new(beliefs)?.project(evals, beliefs)
}

/// `Σ_i c_i Φ_s^i(λ^j)` for every particle.
pub fn reconstruct(coeffs: &[f64], beliefs: &[SampledBelief]) -> Vec<f64> {
    let n = beliefs.first().map_or(0, |b| b.phi_evals.len());
    let mut out = vec![0.0; n];
    for (c, b) in coeffs.iter().zip(beliefs) {
        for (o, p) in out.iter_mut().zip(&b.phi_evals) {
            *o += c * p;
        }
    }
    out
}
