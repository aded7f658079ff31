use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{IbrlError, Result};
use crate::game::StochasticGame;
use crate::opponent::{BehaviorModel, LikelihoodTable, SufficientStats};

/// A sampled belief `b^i = η Φ^i b`.
///
/// `phi_evals` holds `Φ^i(λ^j)` divided by its maximum over particles; the
/// dropped factor `exp(log_scale)` cancels in every self-normalized ratio, and
/// the projection basis uses the rescaled functions consistently.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledBelief {
    pub counts: SufficientStats,
    pub phi_evals: Vec<f64>,
    pub log_scale: f64,
    /// `Φ^i(λ^j) / Σ_k Φ^i(λ^k)`.
    pub weights: Vec<f64>,
    /// `n / Σ_j phi_evals[j]`.
    pub eta: f64,
}

impl SampledBelief {
    pub fn new(counts: SufficientStats, table: &LikelihoodTable) -> Result<Self> {
        let log_phi = table.log_phi(&counts)?;
        let max = log_phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(IbrlError::DegenerateBelief);
        }
        let phi_evals = log_phi.iter().map(|&l| (l - max).exp()).collect();
        Self::from_parts(counts, phi_evals, max)
    }

    /// Rebuilds the derived fields from stored `Φ` evaluations.
    pub fn from_parts(counts: SufficientStats, phi_evals: Vec<f64>, log_scale: f64) -> Result<Self> {
        let sum: f64 = phi_evals.iter().sum();
        if !(sum > 0.0) || phi_evals.iter().any(|p| !(*p >= 0.0)) {
            return Err(IbrlError::DegenerateBelief);
        }
        let weights = phi_evals.iter().map(|&p| p / sum).collect();
        Ok(Self {
            counts,
            eta: phi_evals.len() as f64 / sum,
            phi_evals,
            log_scale,
            weights,
        })
    }

    /// The prior (`ψ ≡ 0`).
    pub fn prior(table: &LikelihoodTable) -> Self {
        let counts = SufficientStats::new(table.num_states(), table.num_actions());
        Self::from_parts(counts, vec![1.0; table.num_particles()], 0.0).expect("unit evaluations")
    }
}

/// `⟨g, b⟩ ≈ Σ_j g(λ^j) Φ(λ^j) / Σ_j Φ(λ^j)`.
pub fn mc_inner(g_evals: &[f64], belief: &SampledBelief) -> Result<f64> {
    if g_evals.len() != belief.phi_evals.len() {
        return Err(IbrlError::InvalidArgument(format!(
            "g has {} evaluations but the belief has {} particles",
            g_evals.len(),
            belief.phi_evals.len()
        )));
    }
    let den: f64 = belief.phi_evals.iter().sum();
    if !(den > 0.0) {
        return Err(IbrlError::DegenerateBelief);
    }
    let num: f64 = g_evals.iter().zip(&belief.phi_evals).map(|(g, p)| g * p).sum();
    Ok(num / den)
}

/// `B_s` for every state; element 0 of each list is the prior.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledBeliefSet {
    per_state: Vec<Vec<SampledBelief>>,
}

impl SampledBeliefSet {
    pub fn from_states(per_state: Vec<Vec<SampledBelief>>) -> Result<Self> {
        for (s, beliefs) in per_state.iter().enumerate() {
            match beliefs.first() {
                Some(b) if b.counts.is_empty() => {}
                _ => {
                    return Err(IbrlError::InvalidArgument(format!(
                        "belief set of state {s} must start with the prior"
                    )))
                }
            }
        }
        Ok(Self { per_state })
    }

    /// Builds beliefs from explicit count vectors; the prior is prepended
    /// when absent.
    pub fn from_counts(table: &LikelihoodTable, counts: Vec<Vec<SufficientStats>>) -> Result<Self> {
        let per_state = counts
            .into_iter()
            .map(|list| {
                let mut out = vec![SampledBelief::prior(table)];
                for c in list.into_iter().filter(|c| !c.is_empty()) {
                    out.push(SampledBelief::new(c, table)?);
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { per_state })
    }

    /// Every state gets only the prior.
    pub fn prior_only(table: &LikelihoodTable, num_states: usize) -> Self {
        Self {
            per_state: vec![vec![SampledBelief::prior(table)]; num_states],
        }
    }

    pub fn num_states(&self) -> usize {
        self.per_state.len()
    }

    pub fn state(&self, s: usize) -> &[SampledBelief] {
        &self.per_state[s]
    }

    pub fn states(&self) -> &[Vec<SampledBelief>] {
        &self.per_state
    }

    pub fn total(&self) -> usize {
        self.per_state.iter().map(Vec::len).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BeliefSamplingConfig {
    /// Upper bound on `|B_s|`, prior included.
    pub per_state_count: usize,
    /// Maximum simulated history length.
    pub depth: usize,
    pub rollouts: usize,
}

/// Collects beliefs reachable from the initial state under uniformly random
/// agent actions, with opponent actions drawn from a fresh prior sample per
/// rollout. Each visited state records the counts accumulated on arrival;
/// states with more candidates than room keep a spread of history lengths.
pub fn sample_reachable_beliefs<R: Rng>(
    game: &StochasticGame,
    model: &dyn BehaviorModel,
    table: &LikelihoodTable,
    config: &BeliefSamplingConfig,
    rng: &mut R,
) -> Result<SampledBeliefSet> {
    if config.per_state_count == 0 {
        return Err(IbrlError::InvalidArgument("per_state_count must be >= 1".into()));
    }
    if model.num_states() != game.num_states() || model.num_actions() != game.num_opponent_actions() {
        return Err(IbrlError::InvalidArgument("model does not match game dimensions".into()));
    }
    let (ns, nu, nv) = (
        game.num_states(),
        game.num_agent_actions(),
        game.num_opponent_actions(),
    );
    let mut seen: Vec<HashSet<SufficientStats>> = vec![HashSet::new(); ns];
    let mut candidates: Vec<Vec<SufficientStats>> = vec![Vec::new(); ns];
    let mut probs = vec![0.0; nv];

    if config.per_state_count > 1 {
        for _ in 0..config.rollouts {
            let lam = model.prior_sample(rng);
            let mut s = game.initial_state();
            let mut counts = SufficientStats::new(ns, nv);
            for _ in 0..config.depth {
                let u = rng.random_range(0..nu);
                model.action_probs(&lam, s, &mut probs);
                let v = sample_index(&probs, rng.random::<f64>());
                let next = game.sample_next(s, u, v, rng.random::<f64>());
                counts.increment(s, v)?;
                if seen[next].insert(counts.clone()) {
                    candidates[next].push(counts.clone());
                }
                s = next;
            }
        }
    }

    let keep = config.per_state_count - 1;
    let per_state = candidates
        .into_iter()
        .map(|mut list| {
            if list.len() > keep {
                list = stratified_pick(list, keep, rng);
            }
            list.sort_by(|a, b| a.total().cmp(&b.total()).then_with(|| a.cmp(b)));
            let mut beliefs = vec![SampledBelief::prior(table)];
            for counts in list {
                match SampledBelief::new(counts, table) {
                    Ok(b) => beliefs.push(b),
                    Err(IbrlError::DegenerateBelief) => {}
                    Err(e) => return Err(e),
                }
            }
            Ok(beliefs)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampledBeliefSet { per_state })
}

/// Inverse-CDF draw from `probs` using one uniform in `[0, 1)`.
pub fn sample_index(probs: &[f64], uniform: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if uniform < acc {
                return i;
            }
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opponent::test_models::Coin;
    use crate::opponent::{BehaviorParams, ParticleSet};

    fn coin_table(states: usize) -> (Coin, LikelihoodTable) {
        let m = Coin { states };
        let particles = ParticleSet::new(
            [0.1, 0.4, 0.5, 0.9].iter().map(|&p| BehaviorParams(vec![p])).collect(),
            0,
        );
        let t = LikelihoodTable::build(&m, &particles).unwrap();
        (m, t)
    }

    #[test]
    fn constant_function_integrates_to_itself() {
        let (_, t) = coin_table(1);
        let psi = SufficientStats::from_observations(1, 2, [(0, 0), (0, 0), (0, 1)]).unwrap();
        let b = SampledBelief::new(psi, &t).unwrap();
        let c = -3.75;
        assert!((mc_inner(&[c; 4], &b).unwrap() - c).abs() < 1e-12);
    }

    #[test]
    fn prior_inner_product_is_the_particle_mean() {
        let (_, t) = coin_table(1);
        let b = SampledBelief::prior(&t);
        let g = [1.0, 2.0, 3.0, 10.0];
        assert!((mc_inner(&g, &b).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let (_, t) = coin_table(1);
        assert!(mc_inner(&[1.0; 3], &SampledBelief::prior(&t)).is_err());
    }

    #[test]
    fn one_belief_per_state_is_prior_only() {
        let (m, t) = coin_table(1);
        let mut b = GameBuilderHelper::one_state();
        let cfg = BeliefSamplingConfig {
            per_state_count: 1,
            depth: 5,
            rollouts: 10,
        };
        let set = sample_reachable_beliefs(&b.game, &m, &t, &cfg, &mut b.rng).unwrap();
        assert_eq!(set.state(0).len(), 1);
        assert!(set.state(0)[0].counts.is_empty());
    }

    #[test]
    fn depth_one_beliefs_have_a_single_count() {
        let (m, t) = coin_table(1);
        let mut b = GameBuilderHelper::one_state();
        let cfg = BeliefSamplingConfig {
            per_state_count: 10,
            depth: 1,
            rollouts: 50,
        };
        let set = sample_reachable_beliefs(&b.game, &m, &t, &cfg, &mut b.rng).unwrap();
        assert_eq!(set.state(0).len(), 3);
        for belief in &set.state(0)[1..] {
            assert_eq!(belief.counts.total(), 1);
        }
    }

    struct GameBuilderHelper {
        game: StochasticGame,
        rng: rand_chacha::ChaCha8Rng,
    }

    impl GameBuilderHelper {
        fn one_state() -> Self {
            use rand::SeedableRng;
            let mut b = crate::game::GameBuilder::new("one", 1, 2, 2).discount(0.9);
            for u in 0..2 {
                for v in 0..2 {
                    b.set_transition(0, u, v, 0, 1.0);
                }
            }
            Self {
                game: b.build().unwrap(),
                rng: rand_chacha::ChaCha8Rng::seed_from_u64(1),
            }
        }
    }
}

/// Picks `keep` count vectors spread over history lengths: candidates are
/// bucketed by total count and drawn round-robin from the shortest histories
/// up, at random within a bucket. A plain random subset is dominated by long
/// histories and leaves the early beliefs, where most of the learning
/// happens, thinly covered.
fn stratified_pick<R: Rng>(list: Vec<SufficientStats>, keep: usize, rng: &mut R) -> Vec<SufficientStats> {
    let mut buckets: BTreeMap<u64, Vec<SufficientStats>> = BTreeMap::new();
    for c in list {
        buckets.entry(c.total()).or_default().push(c);
    }
    let mut buckets: Vec<Vec<SufficientStats>> = buckets.into_values().collect();
    for b in &mut buckets {
        b.shuffle(rng);
    }
    let mut out = Vec::with_capacity(keep);
    while out.len() < keep {
        for b in &mut buckets {
            if out.len() == keep {
                break;
            }
            if let Some(c) = b.pop() {
                out.push(c);
            }
        }
    }
    out
}
