//! The benchmark games and their opponent models.

mod chain;
mod gipps;
mod intersection;
mod ipd;

use std::sync::Arc;

pub use chain::{build_chain_world, ACTION_A, ACTION_B, CHAIN_LENGTH};
pub use gipps::{
    desired_speed, gipps_next_speed_dist, safe_speed, DriverContext, GippsModel, GippsParams, SPEED_LEVELS,
};
pub use intersection::{
    advance_probability, build_intersection, build_intersection_with, IntersectionLayout, IntersectionState,
    COLLISION_REWARD, CROSSING_REWARD, STEP_REWARD,
};
pub use ipd::{build_ipd, BETRAY, COOPERATE};

use crate::error::{IbrlError, Result};
use crate::game::StochasticGame;
use crate::opponent::BehaviorModel;
use crate::planner::PlannerConfig;

/// Suggested planning and evaluation settings for an environment.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentDefaults {
    pub planner: PlannerConfig,
    pub num_particles: usize,
    pub opponents: usize,
    pub episodes: usize,
    pub steps: usize,
}

#[derive(Clone)]
pub struct Environment {
    pub name: String,
    pub game: StochasticGame,
    pub model: Arc<dyn BehaviorModel>,
    pub defaults: EnvironmentDefaults,
}

impl std::fmt::Debug for Environment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Environment")
            .field("name", &self.name)
            .field("states", &self.game.num_states())
            .field("model", &self.model.descriptor().name)
            .finish()
    }
}

pub const ENVIRONMENT_NAMES: [&str; 4] = ["chain", "ipd", "intersection", "intersection-reduced"];

pub fn build_environment(name: &str) -> Result<Environment> {
    match name {
        "chain" => build_chain_world(),
        "ipd" => build_ipd(),
        "intersection" => build_intersection(false),
        "intersection-reduced" => build_intersection(true),
        other => Err(IbrlError::InvalidArgument(format!(
            "unknown environment {other:?} (expected one of {})",
            ENVIRONMENT_NAMES.join(", ")
        ))),
    }
}
