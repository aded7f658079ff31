//! α-function planning over particle-evaluated value functions.

mod alpha;
mod backup;
mod belief;
mod bundle;
mod plan;
mod policy;
mod projection;
mod prune;

pub use alpha::{AlphaFunction, AlphaSet, Provenance};
pub use backup::{
    belief_value, exact_backup, exact_backup_pruned, pb_backup, BackupContext, DEFAULT_EXPLOSION_CAP,
};
pub use belief::{
    mc_inner, sample_reachable_beliefs, BeliefSamplingConfig, SampledBelief, SampledBeliefSet,
};
pub use bundle::{BundleVariant, PlanMetadata, PlanMode, PolicyBundle, StatePolicy, FORMAT_VERSION};
pub use plan::{
    build_bundle, plan, plan_with_beliefs, project_set, sup_change, sweep, PlanOutcome, PlannerConfig,
};
pub use policy::{BeliefTracker, Policy};
pub use projection::{project_alpha, reconstruct, Projection, ProjectionSystem, RIDGE_SCALE};
pub use prune::prune_indices;

pub(crate) use alpha::{argmax, dot};
pub use belief::sample_index;
