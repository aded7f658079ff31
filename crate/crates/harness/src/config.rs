//! Experiment configuration, read from TOML.
//!
//! Every section is optional; anything left out falls back to the chosen
//! environment's defaults.
//!
//! ```toml
//! [environment]
//! name = "chain"
//!
//! [agents]
//! list = ["ibrl", "bpvi", "exploit", "oracle", "meta"]
//!
//! [planner]
//! horizon = 60
//! particles = 200
//! beliefs = 16
//!
//! [protocol]
//! opponents = 20
//! episodes = 10
//! steps = 100
//!
//! [seeds]
//! master = 7
//!
//! [output]
//! dir = "results/chain"
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ibrl_core::baselines::{PointEstimate, PosteriorDraw};
use ibrl_core::environments::{build_environment, Environment};
use ibrl_core::planner::{PlanMode, PlannerConfig, DEFAULT_EXPLOSION_CAP};
use serde::Deserialize;

use crate::error::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentKind {
    Ibrl,
    IbrlDiscrete,
    Bpvi,
    Exploit,
    Oracle,
    Meta,
}

impl AgentKind {
    pub const ALL: [AgentKind; 6] = [
        AgentKind::Ibrl,
        AgentKind::IbrlDiscrete,
        AgentKind::Bpvi,
        AgentKind::Exploit,
        AgentKind::Oracle,
        AgentKind::Meta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Ibrl => "ibrl",
            AgentKind::IbrlDiscrete => "ibrl-discrete",
            AgentKind::Bpvi => "bpvi",
            AgentKind::Exploit => "exploit",
            AgentKind::Oracle => "oracle",
            AgentKind::Meta => "meta",
        }
    }
}

impl FromStr for AgentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown agent {s:?}")))
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub environment: EnvironmentSection,
    #[serde(default)]
    pub agents: AgentsSection,
    #[serde(default)]
    pub planner: PlannerSection,
    #[serde(default)]
    pub baselines: BaselinesSection,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub seeds: SeedsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSection {
    pub name: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentsSection {
    pub list: Option<Vec<String>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSection {
    pub horizon: Option<usize>,
    pub particles: Option<usize>,
    pub beliefs: Option<usize>,
    pub depth: Option<usize>,
    pub rollouts: Option<usize>,
    /// "point_based" or "exact".
    pub mode: Option<String>,
    pub explosion_cap: Option<usize>,
    pub convergence_tol: Option<f64>,
    pub carry_projected: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselinesSection {
    pub bpvi_samples: Option<usize>,
    /// Steps between BPVI re-solves; 1 re-solves every step.
    pub bpvi_resolve_interval: Option<usize>,
    /// "particles" or "conjugate".
    pub bpvi_posterior: Option<String>,
    /// "prior_mean" or "posterior_mean".
    pub exploit_estimate: Option<String>,
    pub value_tolerance: Option<f64>,
    pub maximin_rounds: Option<usize>,
    pub maximin_tolerance: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub opponents: Option<usize>,
    pub episodes: Option<usize>,
    pub steps: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedsSection {
    pub master: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineSettings {
    pub bpvi_samples: usize,
    pub bpvi_resolve_interval: usize,
    pub bpvi_posterior: PosteriorDraw,
    pub exploit_estimate: PointEstimate,
    pub value_tolerance: f64,
    pub maximin_rounds: usize,
    pub maximin_tolerance: f64,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        Self {
            bpvi_samples: 10,
            bpvi_resolve_interval: 1,
            bpvi_posterior: PosteriorDraw::Particles,
            exploit_estimate: PointEstimate::PriorMean,
            value_tolerance: 1e-6,
            maximin_rounds: 10_000,
            maximin_tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Protocol {
    pub opponents: usize,
    pub episodes: usize,
    pub steps: usize,
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub environment: String,
    pub agents: Vec<AgentKind>,
    pub planner: PlannerConfig,
    pub particles: usize,
    pub baselines: BaselineSettings,
    pub protocol: Protocol,
    pub master_seed: u64,
    pub output_dir: Option<PathBuf>,
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        Self::from_raw(RawConfig::from_toml(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_raw(RawConfig::load(path)?)
    }

    /// Defaults for an environment with the given seed.
    pub fn for_environment(name: &str, master_seed: u64) -> Result<Self, HarnessError> {
        let mut raw = RawConfig::default();
        raw.environment.name = Some(name.to_string());
        raw.seeds.master = Some(master_seed);
        Self::from_raw(raw)
    }

    pub fn from_raw(raw: RawConfig) -> Result<Self, HarnessError> {
        let environment = raw
            .environment
            .name
            .ok_or_else(|| HarnessError::Config("environment.name is required".into()))?;
        let env = build_env(&environment)?;
        let d = &env.defaults;

        let agents = match raw.agents.list {
            Some(list) => list.iter().map(|a| a.parse()).collect::<Result<Vec<_>, _>>()?,
            None => vec![
                AgentKind::Ibrl,
                AgentKind::Bpvi,
                AgentKind::Exploit,
                AgentKind::Oracle,
                AgentKind::Meta,
            ],
        };
        if agents.is_empty() {
            return Err(HarnessError::Config("agents.list is empty".into()));
        }

        let p = raw.planner;
        let mode = match p.mode.as_deref() {
            None | Some("point_based") => PlanMode::PointBased,
            Some("exact") => PlanMode::Exact,
            Some(other) => return Err(HarnessError::Config(format!("unknown planner mode {other:?}"))),
        };
        let planner = PlannerConfig {
            mode,
            horizon: p.horizon.unwrap_or(d.planner.horizon),
            per_state_count: p.beliefs.unwrap_or(d.planner.per_state_count),
            depth: p.depth.unwrap_or(d.planner.depth),
            rollouts: p.rollouts.unwrap_or(d.planner.rollouts),
            belief_seed: 0,
            explosion_cap: p.explosion_cap.unwrap_or(DEFAULT_EXPLOSION_CAP),
            convergence_tol: p.convergence_tol.unwrap_or(d.planner.convergence_tol),
            carry_projected: p.carry_projected.unwrap_or(false),
        };
        let particles = p.particles.unwrap_or(d.num_particles);

        let b = raw.baselines;
        let defaults = BaselineSettings::default();
        let exploit_estimate = match b.exploit_estimate.as_deref() {
            None | Some("prior_mean") => PointEstimate::PriorMean,
            Some("posterior_mean") => PointEstimate::PosteriorMean,
            Some(other) => return Err(HarnessError::Config(format!("unknown exploit estimate {other:?}"))),
        };
        let bpvi_posterior = match b.bpvi_posterior.as_deref() {
            None | Some("particles") => PosteriorDraw::Particles,
            Some("conjugate") => PosteriorDraw::Conjugate,
            Some(other) => return Err(HarnessError::Config(format!("unknown BPVI posterior {other:?}"))),
        };
        let baselines = BaselineSettings {
            bpvi_samples: b.bpvi_samples.unwrap_or(defaults.bpvi_samples),
            bpvi_resolve_interval: b.bpvi_resolve_interval.unwrap_or(defaults.bpvi_resolve_interval),
            bpvi_posterior,
            exploit_estimate,
            value_tolerance: b.value_tolerance.unwrap_or(defaults.value_tolerance),
            maximin_rounds: b.maximin_rounds.unwrap_or(defaults.maximin_rounds),
            maximin_tolerance: b.maximin_tolerance.unwrap_or(defaults.maximin_tolerance),
        };

        let protocol = Protocol {
            opponents: raw.protocol.opponents.unwrap_or(d.opponents),
            episodes: raw.protocol.episodes.unwrap_or(d.episodes),
            steps: raw.protocol.steps.unwrap_or(d.steps),
        };
        let config = Self {
            environment,
            agents,
            planner,
            particles,
            baselines,
            protocol,
            master_seed: raw
                .seeds
                .master
                .ok_or_else(|| HarnessError::Config("seeds.master is required (or pass --seed)".into()))?,
            output_dir: raw.output.dir,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let positive = [
            ("planner.particles", self.particles),
            ("planner.beliefs", self.planner.per_state_count),
            ("planner.rollouts", self.planner.rollouts),
            ("baselines.bpvi_samples", self.baselines.bpvi_samples),
            ("baselines.bpvi_resolve_interval", self.baselines.bpvi_resolve_interval),
            ("protocol.opponents", self.protocol.opponents),
            ("protocol.episodes", self.protocol.episodes),
            ("protocol.steps", self.protocol.steps),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(HarnessError::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.baselines.value_tolerance > 0.0) {
            return Err(HarnessError::Config("baselines.value_tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn build_environment(&self) -> Result<Environment, HarnessError> {
        build_env(&self.environment)
    }
}

fn build_env(name: &str) -> Result<Environment, HarnessError> {
    build_environment(name).map_err(|e| HarnessError::Config(e.to_string()))
}
