use std::sync::Arc;

use super::{Environment, EnvironmentDefaults};
use crate::error::Result;
use crate::game::GameBuilder;
use crate::opponent::FdmModel;
use crate::planner::PlannerConfig;

pub const COOPERATE: usize = 0;
pub const BETRAY: usize = 1;

/// Iterated prisoner's dilemma against a memory-one opponent. The single
/// physical state expands into the initial state plus one information state
/// per previous joint action.
pub fn build_ipd() -> Result<Environment> {
    let mut b = GameBuilder::new("ipd", 1, 2, 2)
        .discount(0.95)
        .history_depth(1)
        .state_labels(vec!["play".into()]);
    let payoff = [[3.0, 0.0], [5.0, 1.0]];
    for u in 0..2 {
        for v in 0..2 {
            b.set_reward(0, u, v, payoff[u][v]);
            b.set_transition(0, u, v, 0, 1.0);
        }
    }
    let game = b.build()?;
    let model = FdmModel::symmetric("fdm-ipd", game.num_states(), 2, 0.5)?;
    Ok(Environment {
        name: "ipd".into(),
        game,
        model: Arc::new(model),
        defaults: EnvironmentDefaults {
            planner: PlannerConfig {
                horizon: 100,
                per_state_count: 96,
                depth: 20,
                rollouts: 2000,
                ..PlannerConfig::default()
            },
            num_particles: 1500,
            opponents: 20,
            episodes: 10,
            steps: 100,
        },
    })
}
