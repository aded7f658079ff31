//! Bayes-optimal planning for an agent facing an opponent of unknown
//! parametric behavior in a discounted stochastic game.
//!
//! The opponent's behavior `p_s^v(λ)` is known up to its parameters `λ`.
//! Beliefs over `λ` are summarized by observation counts, and the value of a
//! belief is the upper envelope of α-functions of `λ`, each carried as its
//! values on a fixed set of prior particles.

pub mod baselines;
pub mod discrete;
pub mod environments;
pub mod error;
pub mod game;
pub mod opponent;
pub mod planner;
pub mod rng;

pub use error::{IbrlError, Result};
pub use game::{GameBuilder, InformationState, StochasticGame};
pub use opponent::{BehaviorModel, BehaviorParams, ParticleSet, SufficientStats};
