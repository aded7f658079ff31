//! Simulating one episode.

use ibrl_core::environments::IntersectionLayout;
use ibrl_core::opponent::{BehaviorModel, BehaviorParams};
use ibrl_core::planner::sample_index;
use ibrl_core::rng::{label, rng_from};
use ibrl_core::StochasticGame;
use rand::Rng;

use crate::agents::Agent;
use crate::config::AgentKind;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepRecord {
    pub state: usize,
    pub action: usize,
    pub opponent_action: usize,
    pub reward: f64,
    pub next_state: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeTrace {
    pub seed: u64,
    pub true_params: BehaviorParams,
    pub steps: Vec<StepRecord>,
    pub total_reward: f64,
    pub discounted_return: f64,
    pub collisions: u32,
    pub crossings: u32,
    /// Set when the agent failed; the trace then stops at the failing step.
    pub error: Option<String>,
}

/// Game-specific events worth counting.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum EventRule {
    #[default]
    None,
    Intersection(IntersectionLayout),
}

impl EventRule {
    pub fn for_environment(name: &str) -> Self {
        match name {
            "intersection" => EventRule::Intersection(IntersectionLayout::full()),
            "intersection-reduced" => EventRule::Intersection(IntersectionLayout::reduced()),
            _ => EventRule::None,
        }
    }

    /// `(collision, crossing)` for a transition.
    pub fn classify(&self, state: usize, next: usize) -> (bool, bool) {
        match self {
            EventRule::None => (false, false),
            EventRule::Intersection(layout) => {
                let start = layout.index(layout.start());
                let collision = !layout.is_collision(layout.decode(state)) && layout.is_collision(layout.decode(next));
                // only a crossing leads back to the start from elsewhere
                let crossing = next == start && state != start;
                (collision, crossing)
            }
        }
    }
}

/// Opponent moves and transitions use one random stream, the agent another,
/// so every agent faces the same environment draws for a given seed.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    agent: &mut dyn Agent,
    kind: AgentKind,
    game: &StochasticGame,
    model: &dyn BehaviorModel,
    true_params: &BehaviorParams,
    horizon: usize,
    seed: u64,
    events: &EventRule,
) -> EpisodeTrace {
    let mut env_rng = rng_from(seed, &[label("environment")]);
    let mut agent_rng = rng_from(seed, &[label("agent"), label(kind.name())]);
    let mut trace = EpisodeTrace {
        seed,
        true_params: true_params.clone(),
        steps: Vec::with_capacity(horizon),
        total_reward: 0.0,
        discounted_return: 0.0,
        collisions: 0,
        crossings: 0,
        error: None,
    };
    let mut probs = vec![0.0; game.num_opponent_actions()];
    let mut state = game.initial_state();
    let mut discount = 1.0;
    for _ in 0..horizon {
        let action = match agent.act(state, &mut agent_rng) {
            Ok(u) => u,
            Err(e) => {
                trace.error = Some(e.to_string());
                break;
            }
        };
        model.action_probs(true_params, state, &mut probs);
        let opponent_action = sample_index(&probs, env_rng.random::<f64>());
        let next_state = game.sample_next(state, action, opponent_action, env_rng.random::<f64>());
        let reward = game.reward(state, action, opponent_action);
        let (collision, crossing) = events.classify(state, next_state);
        trace.collisions += u32::from(collision);
        trace.crossings += u32::from(crossing);
        trace.total_reward += reward;
        trace.discounted_return += discount * reward;
        discount *= game.discount();
        trace.steps.push(StepRecord {
            state,
            action,
            opponent_action,
            reward,
            next_state,
        });
        if let Err(e) = agent.observe(state, action, opponent_action, reward) {
            trace.error = Some(e.to_string());
            break;
        }
        state = next_state;
    }
    trace
}
