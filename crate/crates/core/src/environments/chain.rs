use std::sync::Arc;

use super::{Environment, EnvironmentDefaults};
use crate::error::Result;
use crate::game::GameBuilder;
use crate::opponent::FdmModel;
use crate::planner::PlannerConfig;

pub const CHAIN_LENGTH: usize = 5;
pub const ACTION_A: usize = 0;
pub const ACTION_B: usize = 1;

/// Five-state coordination chain. Coordinating on `a` moves one state forward
/// (from the last state: reward 10 and back to the first); coordinating on `b`
/// returns to the first state with reward 2 unless already there;
/// miscoordination stays put with no reward.
pub fn build_chain_world() -> Result<Environment> {
    let n = CHAIN_LENGTH;
    let mut b = GameBuilder::new("chain", n, 2, 2)
        .discount(0.75)
        .state_labels((1..=n).map(|s| format!("s{s}")).collect());
    for s in 0..n {
        if s + 1 < n {
            b.set_transition(s, ACTION_A, ACTION_A, s + 1, 1.0);
        } else {
            b.set_transition(s, ACTION_A, ACTION_A, 0, 1.0);
            b.set_reward(s, ACTION_A, ACTION_A, 10.0);
        }
        b.set_transition(s, ACTION_B, ACTION_B, 0, 1.0);
        if s != 0 {
            b.set_reward(s, ACTION_B, ACTION_B, 2.0);
        }
        b.set_transition(s, ACTION_A, ACTION_B, s, 1.0);
        b.set_transition(s, ACTION_B, ACTION_A, s, 1.0);
    }
    let game = b.build()?;
    let model = FdmModel::symmetric("fdm-chain", n, 2, 0.5)?;
    Ok(Environment {
        name: "chain".into(),
        game,
        model: Arc::new(model),
        defaults: EnvironmentDefaults {
            planner: PlannerConfig {
                horizon: 60,
                per_state_count: 64,
                depth: 30,
                rollouts: 2000,
                ..PlannerConfig::default()
            },
            num_particles: 1000,
            opponents: 20,
            episodes: 10,
            steps: 100,
        },
    })
}
