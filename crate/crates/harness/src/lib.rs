//! Experiment harness: configuration, agents, episode simulation and the
//! evaluation protocol behind the `ibrl` command-line tool.

pub mod agents;
pub mod config;
pub mod episode;
pub mod error;
pub mod evaluate;
pub mod stats;

pub use agents::{Agent, AgentResources, PlanningTime};
pub use config::{AgentKind, ExperimentConfig};
pub use episode::{run_episode, EpisodeTrace, EventRule, StepRecord};
pub use error::{HarnessError, Result};
pub use evaluate::{evaluate, evaluate_with, AgentSummary, Comparison, EpisodeRow, Evaluation};
