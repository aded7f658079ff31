//! Comparison agents' decision rules and the known-parameter MDP solver
//! they share.

mod bpvi;
mod exploit;
mod mdp;
mod meta;

pub use bpvi::{bpvi_decide, bpvi_evaluate, bpvi_select, myopic_vpi, posterior_samples, BpviDecision, PosteriorDraw};
pub use exploit::{exploit_select, oracle_select, point_estimate, PointEstimate};
pub use mdp::{opponent_policy, solve_mdp, value_iteration, QTable};
pub use meta::{
    fictitious_play, laplace_policy, maximin_values, meta_strategy_select, MatrixGameSolution, MaximinSolution,
};
