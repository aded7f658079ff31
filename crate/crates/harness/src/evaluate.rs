//! The evaluation protocol: `M` opponents drawn from the prior, `N` episodes
//! of `h` steps per agent and opponent, and the files that report it.
//!
//! Seeds fan out from the master seed by index (opponent `i` always gets the
//! same parameters, episode `(i, e)` the same environment stream) so the
//! output does not depend on the agent list or on the number of threads.

use std::fmt::Write as _;
use std::path::Path;

use ibrl_core::opponent::BehaviorParams;
use ibrl_core::rng::{derive_seed, label, rng_from};
use rayon::prelude::*;

use crate::agents::{AgentResources, PlanningTime};
use crate::config::{AgentKind, ExperimentConfig};
use crate::episode::{run_episode, EpisodeTrace, EventRule};
use crate::error::Result;
use crate::stats::{mean, paired_t_test, std_error, PairedTest};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const PLANNING_TIME_FILE: &str = "planning_time.csv";
pub const COMPARE_FILE: &str = "compare.csv";

/// One finished episode.
#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRow {
    /// Position in the configured agent list (an agent may appear twice).
    pub agent_index: usize,
    pub agent: AgentKind,
    pub opponent: usize,
    pub episode: usize,
    pub seed: u64,
    pub steps: usize,
    pub total_reward: f64,
    pub discounted_return: f64,
    pub collisions: u32,
    pub crossings: u32,
    pub error: Option<String>,
}

impl EpisodeRow {
    fn from_trace(agent_index: usize, agent: AgentKind, opponent: usize, episode: usize, t: &EpisodeTrace) -> Self {
        Self {
            agent_index,
            agent,
            opponent,
            episode,
            seed: t.seed,
            steps: t.steps.len(),
            total_reward: t.total_reward,
            discounted_return: t.discounted_return,
            collisions: t.collisions,
            crossings: t.crossings,
            error: t.error.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentSummary {
    pub agent_index: usize,
    pub agent: AgentKind,
    /// Mean undiscounted episode total.
    pub mean: f64,
    /// Standard error of the episode totals.
    pub std_error: f64,
    pub discounted_mean: f64,
    pub episodes: usize,
    pub failed: usize,
    /// Collisions per episode.
    pub collision_rate: f64,
    pub crossing_rate: f64,
    /// Mean episode total against each opponent.
    pub opponent_means: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub reference: AgentKind,
    pub other: AgentKind,
    pub other_index: usize,
    pub test: Option<PairedTest>,
}

#[derive(Clone, Debug)]
pub struct Evaluation {
    pub environment: String,
    pub master_seed: u64,
    pub opponents: Vec<BehaviorParams>,
    pub rows: Vec<EpisodeRow>,
    pub summaries: Vec<AgentSummary>,
    pub planning: Vec<PlanningTime>,
}

pub fn opponent_seed(master: u64, opponent: usize) -> u64 {
    derive_seed(master, &[label("opponent"), opponent as u64])
}

pub fn episode_seed(master: u64, opponent: usize, episode: usize) -> u64 {
    derive_seed(master, &[label("episode"), opponent as u64, episode as u64])
}

pub fn evaluate(config: &ExperimentConfig) -> Result<Evaluation> {
    let resources = AgentResources::prepare(config)?;
    evaluate_with(config, &resources)
}

/// Runs every (agent, opponent, episode) job. Failed episodes are kept as
/// rows with their error; only setup failures abort.
pub fn evaluate_with(config: &ExperimentConfig, res: &AgentResources) -> Result<Evaluation> {
    let env = &res.env;
    let model = env.model.as_ref();
    let p = config.protocol;
    let opponents: Vec<BehaviorParams> = (0..p.opponents)
        .map(|i| model.prior_sample(&mut rng_from(opponent_seed(config.master_seed, i), &[])))
        .collect();
    let events = EventRule::for_environment(&env.name);

    let jobs: Vec<(usize, AgentKind, usize, usize)> = config
        .agents
        .iter()
        .enumerate()
        .flat_map(|(a, &kind)| (0..p.opponents).flat_map(move |i| (0..p.episodes).map(move |e| (a, kind, i, e))))
        .collect();
    let rows: Vec<EpisodeRow> = jobs
        .par_iter()
        .map(|&(a, kind, i, e)| {
            let seed = episode_seed(config.master_seed, i, e);
            let trace = match res.make_agent(kind, &opponents[i]) {
                Ok(mut agent) => run_episode(
                    agent.as_mut(),
                    kind,
                    &env.game,
                    model,
                    &opponents[i],
                    p.steps,
                    seed,
                    &events,
                ),
                Err(err) => EpisodeTrace {
                    seed,
                    true_params: opponents[i].clone(),
                    steps: Vec::new(),
                    total_reward: 0.0,
                    discounted_return: 0.0,
                    collisions: 0,
                    crossings: 0,
                    error: Some(err.to_string()),
                },
            };
            if let Some(err) = &trace.error {
                log::error!("{kind} vs opponent {i}, episode {e}: {err}");
            }
            EpisodeRow::from_trace(a, kind, i, e, &trace)
        })
        .collect();

    let summaries = config
        .agents
        .iter()
        .enumerate()
        .map(|(a, &kind)| summarize(a, kind, &rows, p.opponents))
        .collect();
    Ok(Evaluation {
        environment: env.name.clone(),
        master_seed: config.master_seed,
        opponents,
        rows,
        summaries,
        planning: res.planning.clone(),
    })
}

fn summarize(agent_index: usize, agent: AgentKind, rows: &[EpisodeRow], opponents: usize) -> AgentSummary {
    let mine: Vec<&EpisodeRow> = rows.iter().filter(|r| r.agent_index == agent_index).collect();
    let totals: Vec<f64> = mine.iter().map(|r| r.total_reward).collect();
    let discounted: Vec<f64> = mine.iter().map(|r| r.discounted_return).collect();
    let per_episode = |f: fn(&EpisodeRow) -> u32| mine.iter().map(|r| f64::from(f(r))).sum::<f64>() / mine.len() as f64;
    let opponent_means = (0..opponents)
        .map(|i| {
            let xs: Vec<f64> = mine.iter().filter(|r| r.opponent == i).map(|r| r.total_reward).collect();
            mean(&xs)
        })
        .collect();
    AgentSummary {
        agent_index,
        agent,
        mean: mean(&totals),
        std_error: std_error(&totals),
        discounted_mean: mean(&discounted),
        episodes: mine.len(),
        failed: mine.iter().filter(|r| r.error.is_some()).count(),
        collision_rate: per_episode(|r| r.collisions),
        crossing_rate: per_episode(|r| r.crossings),
        opponent_means,
    }
}

impl Evaluation {
    pub fn summary(&self, agent: AgentKind) -> Option<&AgentSummary> {
        self.summaries.iter().find(|s| s.agent == agent)
    }

    /// Paired one-sided tests of the first listed agent against every other,
    /// over per-opponent means.
    pub fn compare(&self) -> Vec<Comparison> {
        let Some((first, rest)) = self.summaries.split_first() else {
            return Vec::new();
        };
        rest.iter()
            .map(|s| Comparison {
                reference: first.agent,
                other: s.agent,
                other_index: s.agent_index,
                test: paired_t_test(&first.opponent_means, &s.opponent_means),
            })
            .collect()
    }

    /// Long-format results: one `episode` row per job, one `opponent` row per
    /// (agent, opponent) and one `overall` row per agent.
    pub fn results_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "kind",
            "agent_index",
            "agent",
            "opponent",
            "episode",
            "seed",
            "steps",
            "total_reward",
            "discounted_return",
            "std_error",
            "collisions",
            "crossings",
            "error",
        ])?;
        for r in &self.rows {
            w.write_record([
                "episode".to_string(),
                r.agent_index.to_string(),
                r.agent.to_string(),
                r.opponent.to_string(),
                r.episode.to_string(),
                r.seed.to_string(),
                r.steps.to_string(),
                r.total_reward.to_string(),
                r.discounted_return.to_string(),
                String::new(),
                r.collisions.to_string(),
                r.crossings.to_string(),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
        for s in &self.summaries {
            for (i, m) in s.opponent_means.iter().enumerate() {
                let rows: Vec<&EpisodeRow> = self
                    .rows
                    .iter()
                    .filter(|r| r.agent_index == s.agent_index && r.opponent == i)
                    .collect();
                let disc: Vec<f64> = rows.iter().map(|r| r.discounted_return).collect();
                let totals: Vec<f64> = rows.iter().map(|r| r.total_reward).collect();
                w.write_record([
                    "opponent".to_string(),
                    s.agent_index.to_string(),
                    s.agent.to_string(),
                    i.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    m.to_string(),
                    mean(&disc).to_string(),
                    std_error(&totals).to_string(),
                    rows.iter().map(|r| r.collisions).sum::<u32>().to_string(),
                    rows.iter().map(|r| r.crossings).sum::<u32>().to_string(),
                    String::new(),
                ])?;
            }
        }
        for s in &self.summaries {
            w.write_record([
                "overall".to_string(),
                s.agent_index.to_string(),
                s.agent.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                s.mean.to_string(),
                s.discounted_mean.to_string(),
                s.std_error.to_string(),
                self.rows
                    .iter()
                    .filter(|r| r.agent_index == s.agent_index)
                    .map(|r| r.collisions)
                    .sum::<u32>()
                    .to_string(),
                self.rows
                    .iter()
                    .filter(|r| r.agent_index == s.agent_index)
                    .map(|r| r.crossings)
                    .sum::<u32>()
                    .to_string(),
                if s.failed > 0 {
                    format!("{} failed episodes", s.failed)
                } else {
                    String::new()
                },
            ])?;
        }
        into_bytes(w)
    }

    /// Cumulative planning seconds after each sweep `k`.
    pub fn planning_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["agent", "horizon", "seconds"])?;
        for p in &self.planning {
            for (k, t) in p.sweep_seconds.iter().enumerate() {
                w.write_record([p.agent.to_string(), (k + 1).to_string(), t.to_string()])?;
            }
        }
        into_bytes(w)
    }

    pub fn compare_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["reference", "other", "other_index", "mean_difference", "t", "df", "p_value"])?;
        for c in self.compare() {
            let (d, t, df, p) = match c.test {
                Some(r) => (r.mean_difference.to_string(), r.t.to_string(), r.df.to_string(), r.p_value.to_string()),
                None => Default::default(),
            };
            w.write_record([c.reference.to_string(), c.other.to_string(), c.other_index.to_string(), d, t, df, p])?;
        }
        into_bytes(w)
    }

    pub fn summary_text(&self) -> String {
        let mut out = String::new();
        let (m, n) = (
            self.opponents.len(),
            self.summaries.first().map_or(0, |s| s.episodes) / self.opponents.len().max(1),
        );
        let _ = writeln!(
            out,
            "environment {}  seed {}  opponents {m}  episodes per opponent {n}",
            self.environment, self.master_seed
        );
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<14} {:>12} {:>10} {:>12} {:>10} {:>10} {:>7}",
            "agent", "mean R", "± s.e.", "discounted", "collide", "cross", "failed"
        );
        for s in &self.summaries {
            let _ = writeln!(
                out,
                "{:<14} {:>12.3} {:>10.3} {:>12.3} {:>10.3} {:>10.3} {:>7}",
                s.agent.name(),
                s.mean,
                s.std_error,
                s.discounted_mean,
                s.collision_rate,
                s.crossing_rate,
                s.failed
            );
        }
        let comparisons = self.compare();
        if !comparisons.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "paired one-sided t-tests over opponent means");
            for c in comparisons {
                match c.test {
                    Some(t) => {
                        let _ = writeln!(
                            out,
                            "  {} > {}: diff {:.3}, t {:.3} on {} df, p {:.4}",
                            c.reference, c.other, t.mean_difference, t.t, t.df, t.p_value
                        );
                    }
                    None => {
                        let _ = writeln!(out, "  {} > {}: needs at least two opponents", c.reference, c.other);
                    }
                }
            }
        }
        out
    }

    /// Writes results, summary and planning times into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(RESULTS_FILE), self.results_csv()?)?;
        std::fs::write(dir.join(SUMMARY_FILE), self.summary_text())?;
        std::fs::write(dir.join(PLANNING_TIME_FILE), self.planning_csv()?)?;
        std::fs::write(dir.join(COMPARE_FILE), self.compare_csv()?)?;
        Ok(())
    }
}

fn into_bytes(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner()
        .map_err(|e| crate::error::HarnessError::Io(e.into_error()))
}
