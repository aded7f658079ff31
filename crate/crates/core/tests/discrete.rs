mod common;

use ibrl_core::baselines::value_iteration;
use ibrl_core::discrete::{discrete_backup, discrete_value, plan_discrete, DiscreteAlphaVector, DiscreteBelief};
use ibrl_core::environments::build_chain_world;
use ibrl_core::planner::{
    exact_backup, plan_with_beliefs, sample_reachable_beliefs, AlphaFunction, AlphaSet, BackupContext,
    PlannerConfig, Provenance, SampledBeliefSet, DEFAULT_EXPLOSION_CAP,
};
use ibrl_core::rng::rng_from;
use ibrl_core::{ParticleSet, StochasticGame};
use rand::Rng;

fn random_alpha_set(states: usize, n: usize, rng: &mut impl Rng) -> AlphaSet {
    AlphaSet::from_states(
        (0..states)
            .map(|_| {
                let size = rng.random_range(1..=2);
                (0..size)
                    .map(|_| {
                        let evals: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
                        AlphaFunction {
                            terms: n as u64,
                            evals,
                            action: 0,
                            provenance: Provenance { action: 0, choices: Vec::new() },
                            coeffs: None,
                        }
                    })
                    .collect()
            })
            .collect(),
    )
}

/// Straight from the definition, reading `θ` off the particles themselves.
fn oracle_values(
    game: &StochasticGame,
    particles: &ParticleSet,
    s: usize,
    u: usize,
    choice: &[usize],
    prev: &AlphaSet,
) -> Vec<f64> {
    let (ns, nv) = (game.num_states(), game.num_opponent_actions());
    particles
        .iter()
        .enumerate()
        .map(|(j, lam)| {
            (0..nv)
                .map(|v| {
                    let theta = lam.0[s * nv + v];
                    let future: f64 = (0..ns)
                        .map(|next| {
                            let p = game.transition_prob(s, u, v, next);
                            if p > 0.0 {
                                p * prev.state(next)[choice[v * ns + next]].evals[j]
                            } else {
                                0.0
                            }
                        })
                        .sum();
                    theta * (game.reward(s, u, v) + game.discount() * future)
                })
                .sum()
        })
        .collect()
}

#[test]
fn indicator_backup_reproduces_particle_evaluations() {
    let mut rng = rng_from(1, &[]);
    let mut checked = 0;
    for case in 0..100u64 {
        let ns = rng.random_range(2..=3);
        let nu = rng.random_range(1..=3);
        let nv = rng.random_range(2..=3);
        let game = common::random_game(ns, nu, nv, 0.95, 1000 + case);
        let model = common::fdm(ns, nv);
        let n = rng.random_range(1..=6);
        let (particles, table) = common::particles_and_table(&model, n, 2000 + case);
        let prev = random_alpha_set(ns, n, &mut rng);
        let discrete_prev: Vec<Vec<DiscreteAlphaVector>> = prev
            .states()
            .iter()
            .map(|set| set.iter().map(|a| DiscreteAlphaVector { values: a.evals.clone(), action: 0 }).collect())
            .collect();
        let ctx = BackupContext::new(&game, &table).unwrap();
        let s = rng.random_range(0..ns);
        let produced = exact_backup(&ctx, s, &prev, DEFAULT_EXPLOSION_CAP).unwrap();
        for alpha in produced.iter().step_by(7) {
            let mut choice = vec![0usize; ns * nv];
            for &(next, v, t) in &alpha.provenance.choices {
                choice[v as usize * ns + next as usize] = t as usize;
            }
            let u = alpha.provenance.action;
            let d = discrete_backup(&game, &table, s, u, &choice, &discrete_prev).unwrap();
            let oracle = oracle_values(&game, &particles, s, u, &choice, &prev);
            assert_eq!(d.action, alpha.action);
            for j in 0..n {
                assert!((d.values[j] - alpha.evals[j]).abs() <= 1e-12, "case {case}: {} vs {}", d.values[j], alpha.evals[j]);
                assert!((d.values[j] - oracle[j]).abs() <= 1e-12, "case {case}: {} vs oracle {}", d.values[j], oracle[j]);
            }
            checked += 1;
        }
    }
    assert!(checked >= 100);
}

#[test]
fn one_particle_is_value_iteration() {
    for seed in 0..5 {
        let game = common::random_game(3, 2, 2, 0.9, 50 + seed);
        let model = common::fdm(3, 2);
        let (particles, table) = common::particles_and_table(&model, 1, 60 + seed);
        let config = PlannerConfig {
            horizon: 1000,
            per_state_count: 1,
            convergence_tol: 1e-13,
            ..PlannerConfig::default()
        };
        let beliefs = SampledBeliefSet::prior_only(&table, 3);
        let out = plan_discrete(&game, &model, &particles, &table, beliefs, &config).unwrap();
        let q = value_iteration(&game, &model, &particles.params()[0], 1e-13).unwrap();
        for s in 0..3 {
            let v = discrete_value(&out.sets[s], &DiscreteBelief::uniform(1));
            assert!((v - q.value(s)).abs() <= 1e-9, "state {s}: {v} vs {}", q.value(s));
        }
    }
}

#[test]
fn zero_horizon_gives_zero_vectors() {
    let game = common::toy_game(3);
    let model = common::fdm(2, 2);
    let (particles, table) = common::particles_and_table(&model, 5, 4);
    let config = PlannerConfig {
        horizon: 0,
        ..PlannerConfig::default()
    };
    let beliefs = SampledBeliefSet::prior_only(&table, 2);
    let out = plan_discrete(&game, &model, &particles, &table, beliefs, &config).unwrap();
    assert!(out.sweep_seconds.is_empty());
    for set in &out.sets {
        assert!(set.iter().all(|a| a.values.iter().all(|&x| x == 0.0)));
    }
}

#[test]
fn both_planners_agree_on_the_chain_prior() {
    let env = build_chain_world().unwrap();
    let model = env.model.as_ref();
    let particles = ParticleSet::draw(model, 200, 7).unwrap();
    let table = ibrl_core::opponent::LikelihoodTable::build(model, &particles).unwrap();
    let config = PlannerConfig {
        horizon: 60,
        per_state_count: 16,
        depth: 10,
        rollouts: 2000,
        belief_seed: 8,
        ..PlannerConfig::default()
    };
    let mut rng = rng_from(config.belief_seed, &[]);
    let beliefs = sample_reachable_beliefs(&env.game, model, &table, &config.sampling(), &mut rng).unwrap();
    let ours = plan_with_beliefs(&env.game, model, &particles, &table, beliefs.clone(), &config).unwrap();
    let theirs = plan_discrete(&env.game, model, &particles, &table, beliefs, &config).unwrap();

    let s0 = env.game.initial_state();
    let prior = vec![1.0 / 200.0; 200];
    let (i, v_ours) = ours.alphas.best(s0, &prior);
    let v_theirs = discrete_value(&theirs.sets[s0], &DiscreteBelief::uniform(200));
    assert!((v_ours - v_theirs).abs() <= 0.1 * v_theirs.abs(), "{v_ours} vs {v_theirs}");
    let best_theirs = theirs.sets[s0]
        .iter()
        .max_by(|a, b| {
            let va: f64 = a.values.iter().sum();
            let vb: f64 = b.values.iter().sum();
            va.total_cmp(&vb)
        })
        .unwrap();
    assert_eq!(ours.alphas.state(s0)[i].action, best_theirs.action);
}
