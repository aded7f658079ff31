//! The agents compared by the harness.
//!
//! Anything expensive and shared (plans, maximin tables, Q-tables per
//! particle) lives in [`AgentResources`]; agents themselves are created fresh
//! for every episode and only hold their own counts.

use ibrl_core::baselines::{
    bpvi_decide, laplace_policy, maximin_values, opponent_policy, point_estimate, posterior_samples, solve_mdp,
    value_iteration, MaximinSolution, PointEstimate, PosteriorDraw, QTable,
};
use ibrl_core::discrete::plan_discrete;
use ibrl_core::environments::Environment;
use ibrl_core::opponent::{BehaviorParams, LikelihoodTable, ParticleSet, SufficientStats};
use ibrl_core::planner::{
    plan_with_beliefs, sample_index, sample_reachable_beliefs, BeliefTracker, Policy, PolicyBundle,
};
use ibrl_core::rng::{derive_seed, label, rng_from};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{AgentKind, BaselineSettings, ExperimentConfig};
use crate::error::Result;

/// One decision-maker in an episode.
pub trait Agent {
    fn act(&mut self, state: usize, rng: &mut ChaCha8Rng) -> Result<usize>;

    /// Called after every step with the opponent's move and the reward.
    fn observe(&mut self, state: usize, action: usize, opponent_action: usize, reward: f64) -> Result<()>;
}

/// Wall-clock planning cost of one planner, cumulative per sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanningTime {
    pub agent: AgentKind,
    pub sweep_seconds: Vec<f64>,
}

/// Shared, read-only state the agents draw on.
pub struct AgentResources {
    pub env: Environment,
    pub particles: ParticleSet,
    pub table: LikelihoodTable,
    pub settings: BaselineSettings,
    pub ibrl: Option<(PolicyBundle, Policy)>,
    pub discrete: Option<(PolicyBundle, Policy)>,
    pub maximin: Option<MaximinSolution>,
    pub exploit_prior: Option<QTable>,
    /// Q-tables at every particle, used by BPVI when the model has no
    /// conjugate posterior and samples are particle draws.
    pub particle_q: Option<Vec<QTable>>,
    pub planning: Vec<PlanningTime>,
}

pub fn particle_seed(master: u64) -> u64 {
    derive_seed(master, &[label("particles")])
}

pub fn belief_seed(master: u64) -> u64 {
    derive_seed(master, &[label("beliefs")])
}

impl AgentResources {
    /// Plans and precomputes whatever the configured agents need.
    pub fn prepare(config: &ExperimentConfig) -> Result<Self> {
        let env = config.build_environment()?;
        let model = env.model.as_ref();
        let particles = ParticleSet::draw(model, config.particles, particle_seed(config.master_seed))?;
        let table = LikelihoodTable::build(model, &particles)?;
        let wants = |k: AgentKind| config.agents.contains(&k);
        let tol = config.baselines.value_tolerance;

        let mut planner = config.planner.clone();
        planner.belief_seed = belief_seed(config.master_seed);
        let mut planning = Vec::new();
        let (mut ibrl, mut discrete) = (None, None);
        if wants(AgentKind::Ibrl) || wants(AgentKind::IbrlDiscrete) {
            let mut rng = rng_from(planner.belief_seed, &[]);
            let beliefs = sample_reachable_beliefs(&env.game, model, &table, &planner.sampling(), &mut rng)?;
            if wants(AgentKind::Ibrl) {
                let out = plan_with_beliefs(&env.game, model, &particles, &table, beliefs.clone(), &planner)?;
                let policy = Policy::new(&out.bundle, model)?;
                planning.push(PlanningTime {
                    agent: AgentKind::Ibrl,
                    sweep_seconds: out.sweep_seconds,
                });
                ibrl = Some((out.bundle, policy));
            }
            if wants(AgentKind::IbrlDiscrete) {
                let out = plan_discrete(&env.game, model, &particles, &table, beliefs, &planner)?;
                let policy = Policy::new(&out.bundle, model)?;
                planning.push(PlanningTime {
                    agent: AgentKind::IbrlDiscrete,
                    sweep_seconds: out.sweep_seconds,
                });
                discrete = Some((out.bundle, policy));
            }
        }

        let maximin = wants(AgentKind::Meta).then(|| {
            maximin_values(
                &env.game,
                tol,
                100_000,
                config.baselines.maximin_rounds,
                config.baselines.maximin_tolerance,
            )
        });
        let exploit_prior = if wants(AgentKind::Exploit) && config.baselines.exploit_estimate == PointEstimate::PriorMean
        {
            let lam = point_estimate(
                model,
                PointEstimate::PriorMean,
                &SufficientStats::new(model.num_states(), model.num_actions()),
                &particles,
                &table,
            )?;
            Some(value_iteration(&env.game, model, &lam, tol)?)
        } else {
            None
        };
        let particle_q = if wants(AgentKind::Bpvi)
            && (config.baselines.bpvi_posterior == PosteriorDraw::Particles || !has_conjugate_posterior(&env))
        {
            let tables = particles
                .params()
                .par_iter()
                .map(|p| value_iteration(&env.game, model, p, tol))
                .collect::<ibrl_core::Result<Vec<_>>>()?;
            Some(tables)
        } else {
            None
        };

        Ok(Self {
            env,
            particles,
            table,
            settings: config.baselines.clone(),
            ibrl,
            discrete,
            maximin,
            exploit_prior,
            particle_q,
            planning,
        })
    }

    fn empty_stats(&self) -> SufficientStats {
        SufficientStats::new(self.env.game.num_states(), self.env.game.num_opponent_actions())
    }

    /// A fresh agent for one episode against the opponent `true_params`.
    pub fn make_agent<'a>(&'a self, kind: AgentKind, true_params: &BehaviorParams) -> Result<Box<dyn Agent + 'a>> {
        let missing = |what: &str| crate::error::HarnessError::Config(format!("{kind} needs {what}, which was not prepared"));
        Ok(match kind {
            AgentKind::Ibrl | AgentKind::IbrlDiscrete => {
                let slot = if kind == AgentKind::Ibrl { &self.ibrl } else { &self.discrete };
                let (_, policy) = slot.as_ref().ok_or_else(|| missing("a plan"))?;
                Box::new(IbrlAgent {
                    policy,
                    tracker: policy.tracker(),
                })
            }
            AgentKind::Bpvi => Box::new(BpviAgent {
                res: self,
                stats: self.empty_stats(),
                tables: Vec::new(),
                since_solve: 0,
            }),
            AgentKind::Exploit => match &self.exploit_prior {
                Some(q) => Box::new(FixedQAgent { q: q.clone() }),
                None => {
                    let model = self.env.model.as_ref();
                    let lam = point_estimate(
                        model,
                        PointEstimate::PosteriorMean,
                        &self.empty_stats(),
                        &self.particles,
                        &self.table,
                    )?;
                    let q = value_iteration(&self.env.game, model, &lam, self.settings.value_tolerance)?;
                    Box::new(FixedQAgent { q })
                }
            },
            AgentKind::Oracle => {
                let q = value_iteration(
                    &self.env.game,
                    self.env.model.as_ref(),
                    true_params,
                    self.settings.value_tolerance,
                )?;
                Box::new(FixedQAgent { q })
            }
            AgentKind::Meta => Box::new(MetaAgent {
                res: self,
                maximin: self.maximin.as_ref().ok_or_else(|| missing("maximin values"))?,
                counts: self.empty_stats(),
                accumulated: 0.0,
                steps: 0,
                values: None,
            }),
        })
    }
}

fn has_conjugate_posterior(env: &Environment) -> bool {
    let stats = SufficientStats::new(env.model.num_states(), env.model.num_actions());
    let mut probe = rng_from(0, &[]);
    env.model.posterior_sample(&stats, &mut probe).is_some()
}

/// I-BRL through a precomputed policy; works for both bundle variants.
struct IbrlAgent<'a> {
    policy: &'a Policy,
    tracker: BeliefTracker,
}

impl Agent for IbrlAgent<'_> {
    fn act(&mut self, state: usize, _rng: &mut ChaCha8Rng) -> Result<usize> {
        Ok(self.policy.select_tracked(&self.tracker, state)?)
    }

    fn observe(&mut self, state: usize, _action: usize, opponent_action: usize, _reward: f64) -> Result<()> {
        Ok(self.policy.observe(&mut self.tracker, state, opponent_action)?)
    }
}

/// Greedy in a Q-table fixed for the whole episode (Exploit, Oracle).
struct FixedQAgent {
    q: QTable,
}

impl Agent for FixedQAgent {
    fn act(&mut self, state: usize, _rng: &mut ChaCha8Rng) -> Result<usize> {
        Ok(self.q.greedy(state))
    }

    fn observe(&mut self, _state: usize, _action: usize, _opponent_action: usize, _reward: f64) -> Result<()> {
        Ok(())
    }
}

struct BpviAgent<'a> {
    res: &'a AgentResources,
    stats: SufficientStats,
    tables: Vec<QTable>,
    since_solve: usize,
}

impl BpviAgent<'_> {
    fn resolve(&mut self, rng: &mut ChaCha8Rng) -> Result<()> {
        let res = self.res;
        let m = res.settings.bpvi_samples;
        self.tables = match &res.particle_q {
            Some(per_particle) => {
                let w = res.table.posterior_weights(&self.stats)?;
                (0..m)
                    .map(|_| per_particle[sample_index(&w, rng.random::<f64>())].clone())
                    .collect()
            }
            None => {
                let model = res.env.model.as_ref();
                let samples = posterior_samples(
                    model,
                    &self.stats,
                    &res.particles,
                    &res.table,
                    m,
                    res.settings.bpvi_posterior,
                    rng,
                )?;
                let warm = self.tables.first().map(QTable::values);
                samples
                    .par_iter()
                    .map(|p| {
                        let opp = opponent_policy(model, p)?;
                        solve_mdp(&res.env.game, &opp, res.settings.value_tolerance, warm.as_deref())
                    })
                    .collect::<ibrl_core::Result<Vec<_>>>()?
            }
        };
        self.since_solve = 0;
        Ok(())
    }
}

impl Agent for BpviAgent<'_> {
    fn act(&mut self, state: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
        if self.tables.is_empty() || self.since_solve >= self.res.settings.bpvi_resolve_interval {
            self.resolve(rng)?;
        }
        self.since_solve += 1;
        Ok(bpvi_decide(&self.tables, state).action)
    }

    fn observe(&mut self, state: usize, _action: usize, opponent_action: usize, _reward: f64) -> Result<()> {
        Ok(self.stats.increment(state, opponent_action)?)
    }
}

struct MetaAgent<'a> {
    res: &'a AgentResources,
    maximin: &'a MaximinSolution,
    counts: SufficientStats,
    accumulated: f64,
    steps: u64,
    values: Option<Vec<f64>>,
}

impl Agent for MetaAgent<'_> {
    fn act(&mut self, state: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
        let game = &self.res.env.game;
        let uniform = rng.random::<f64>();
        if self.steps > 0 {
            let average = self.accumulated / self.steps as f64;
            if average < (1.0 - game.discount()) * self.maximin.values[state] {
                return Ok(sample_index(&self.maximin.strategies[state], uniform));
            }
        }
        // Same rule as `meta_strategy_select`, warm-started between steps.
        let q = solve_mdp(
            game,
            &laplace_policy(&self.counts),
            self.res.settings.value_tolerance,
            self.values.as_deref(),
        )?;
        let action = q.greedy(state);
        self.values = Some(q.values());
        Ok(action)
    }

    fn observe(&mut self, state: usize, _action: usize, opponent_action: usize, reward: f64) -> Result<()> {
        self.counts.increment(state, opponent_action)?;
        self.accumulated += reward;
        self.steps += 1;
        Ok(())
    }
}
