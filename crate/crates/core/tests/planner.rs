mod common;

use std::collections::HashMap;

use ibrl_core::baselines::value_iteration;
use ibrl_core::environments::{build_chain_world, build_environment, IntersectionLayout};
use ibrl_core::opponent::{FdmModel, LikelihoodTable};
use ibrl_core::planner::{
    exact_backup, mc_inner, pb_backup, plan, plan_with_beliefs, project_alpha, reconstruct,
    sample_reachable_beliefs, sweep, AlphaSet, BackupContext, BeliefSamplingConfig, PlanMode, PlannerConfig,
    Policy, PolicyBundle, ProjectionSystem, SampledBelief, SampledBeliefSet, DEFAULT_EXPLOSION_CAP,
};
use ibrl_core::rng::rng_from;
use ibrl_core::{BehaviorModel, GameBuilder, ParticleSet, StochasticGame, SufficientStats};
use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::Rng;

/// `max_w min_β ⟨α − β, w⟩` over the probability simplex.
fn best_margin(alpha: &[f64], others: &[&[f64]]) -> f64 {
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let w: Vec<_> = alpha.iter().map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let t = lp.add_var(1.0, (-1e9, 1e9));
    let ones: Vec<_> = w.iter().map(|&x| (x, 1.0)).collect();
    lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    for b in others {
        let mut row: Vec<_> = w.iter().zip(alpha.iter().zip(b.iter())).map(|(&x, (a, b))| (x, a - b)).collect();
        row.push((t, -1.0));
        lp.add_constraint(row.as_slice(), ComparisonOp::Ge, 0.0);
    }
    lp.solve().unwrap().into_solution().unwrap().objective()
}

/// `sup_w |V'(w) − V(w)|` over the whole particle simplex, per state.
fn simplex_sup_change(next: &AlphaSet, prev: &AlphaSet) -> f64 {
    let mut sup: f64 = 0.0;
    for s in 0..next.num_states() {
        let a: Vec<&[f64]> = next.state(s).iter().map(|x| x.evals.as_slice()).collect();
        let b: Vec<&[f64]> = prev.state(s).iter().map(|x| x.evals.as_slice()).collect();
        for x in &a {
            sup = sup.max(best_margin(x, &b));
        }
        for x in &b {
            sup = sup.max(best_margin(x, &a));
        }
    }
    sup
}

fn probe_grid(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from(seed, &[]);
    let mut grid: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    while grid.len() < count {
        let mut w: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().ln()).collect();
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= sum);
        grid.push(w);
    }
    grid
}

fn grid_sup_change(next: &AlphaSet, prev: &AlphaSet, grid: &[Vec<f64>]) -> f64 {
    (0..next.num_states())
        .flat_map(|s| grid.iter().map(move |w| (next.value(s, w) - prev.value(s, w)).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn exact_sweeps_contract_at_the_discount_rate() {
    // exact sets grow geometrically on the non-trivial games, so each run
    // stops once the sets get large
    for seed in [0, 2, 4] {
        let game = common::toy_game(seed);
        let model = common::fdm(2, 2);
        let (_, table) = common::particles_and_table(&model, 3, 100 + seed);
        let ctx = BackupContext::new(&game, &table).unwrap();
        let beliefs = SampledBeliefSet::prior_only(&table, 2);
        let grid = probe_grid(3, 20, seed);
        let phi = game.discount();

        let mut alphas = AlphaSet::zero(2, 3);
        let mut simplex = Vec::new();
        let mut on_grid = Vec::new();
        while simplex.len() < 11 && alphas.total_size() < 100 {
            let next = sweep(&ctx, &beliefs, &alphas, PlanMode::Exact, DEFAULT_EXPLOSION_CAP).unwrap();
            simplex.push(simplex_sup_change(&next, &alphas));
            on_grid.push(grid_sup_change(&next, &alphas, &grid));
            alphas = next;
        }
        assert!(simplex.len() >= 4, "seed {seed}: only {} sweeps", simplex.len());
        for k in 1..simplex.len() {
            assert!(on_grid[k] <= phi * on_grid[k - 1] + 1e-9, "seed {seed} sweep {k}: grid {on_grid:?}");
            // the LP solver works to about 1e-7
            assert!(simplex[k] <= phi * simplex[k - 1] + 1e-6, "seed {seed} sweep {k}: {simplex:?}");
            assert!(on_grid[k] <= simplex[k] + 1e-6, "seed {seed} sweep {k}: grid above simplex sup");
        }
    }
}

/// Every count vector with at most `max_total` observations, in every state.
fn closed_beliefs(table: &LikelihoodTable, max_total: u32) -> SampledBeliefSet {
    let counts = common::all_counts(2, 2, max_total);
    SampledBeliefSet::from_counts(table, vec![counts.clone(), counts]).unwrap()
}

#[test]
fn point_based_values_never_exceed_exact_ones() {
    for seed in 0..3 {
        let game = common::toy_game(10 + seed);
        let model = common::fdm(2, 2);
        let (_, table) = common::particles_and_table(&model, 4, 200 + seed);
        let ctx = BackupContext::new(&game, &table).unwrap();
        let depth: u32 = 4;
        let beliefs = closed_beliefs(&table, 8);

        let mut exact = AlphaSet::zero(2, 4);
        let mut pb = AlphaSet::zero(2, 4);
        for k in 1..=depth {
            exact = sweep(&ctx, &beliefs, &exact, PlanMode::Exact, DEFAULT_EXPLOSION_CAP).unwrap();
            pb = sweep(&ctx, &beliefs, &pb, PlanMode::PointBased, DEFAULT_EXPLOSION_CAP).unwrap();
            for s in 0..2 {
                assert!(beliefs.state(s).len() >= exact.state(s).len(), "too few beliefs for the exact set");
                for b in beliefs.state(s) {
                    let (e, p) = (exact.value(s, &b.weights), pb.value(s, &b.weights));
                    assert!(p <= e + 1e-9, "sweep {k}: pb {p} > exact {e}");
                    // beliefs whose successors up to the remaining depth are all
                    // in the set see exactly the exact backup's choices
                    if b.counts.total() + k as u64 <= u64::from(depth) {
                        assert!((p - e).abs() <= 1e-6, "sweep {k} at {:?}: {p} vs {e}", b.counts);
                    }
                }
            }
        }
    }
}

#[test]
fn base_case_is_the_expected_reward() {
    let game = common::toy_game(3);
    let model = common::fdm(2, 2);
    let (_, table) = common::particles_and_table(&model, 6, 3);
    let ctx = BackupContext::new(&game, &table).unwrap();
    let zero = AlphaSet::zero(2, 6);
    let set = exact_backup(&ctx, 1, &zero, DEFAULT_EXPLOSION_CAP).unwrap();
    assert_eq!(set.len(), 2);
    for a in &set {
        for j in 0..6 {
            let expected: f64 = (0..2).map(|v| table.row(1, v)[j] * game.reward(1, a.action, v)).sum();
            assert!((a.evals[j] - expected).abs() < 1e-15);
        }
    }
}

#[test]
fn unpruned_backup_has_one_function_per_choice_vector() {
    let game = common::toy_game(4);
    let model = common::fdm(2, 2);
    let (_, table) = common::particles_and_table(&model, 4, 4);
    let ctx = BackupContext::new(&game, &table).unwrap();
    let one = exact_backup(&ctx, 0, &AlphaSet::zero(2, 4), DEFAULT_EXPLOSION_CAP).unwrap();
    let prev = AlphaSet::from_states(vec![one.clone(), one]);
    // |U| · Π_{s', v} |Γ_{s'}| = 2 · 2⁴
    assert_eq!(exact_backup(&ctx, 0, &prev, DEFAULT_EXPLOSION_CAP).unwrap().len(), 32);
}

#[test]
fn prior_only_point_backup_picks_the_best_myopic_action() {
    let game = common::toy_game(5);
    let model = common::fdm(2, 2);
    let (_, table) = common::particles_and_table(&model, 8, 5);
    let ctx = BackupContext::new(&game, &table).unwrap();
    let zero = AlphaSet::zero(2, 8);
    let prior = vec![SampledBelief::prior(&table)];
    let pb = pb_backup(&ctx, 0, &prior, &zero).unwrap();
    assert_eq!(pb.len(), 1);
    let exact = exact_backup(&ctx, 0, &zero, DEFAULT_EXPLOSION_CAP).unwrap();
    let best = exact
        .iter()
        .map(|a| mc_inner(&a.evals, &prior[0]).unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((mc_inner(&pb[0].evals, &prior[0]).unwrap() - best).abs() < 1e-12);
}

#[test]
fn point_based_values_grow_when_rewards_are_nonnegative() {
    let mut b = GameBuilder::new("shifted", 2, 2, 2).discount(0.9);
    let base = common::toy_game(6);
    for s in 0..2 {
        for u in 0..2 {
            for v in 0..2 {
                b.set_reward(s, u, v, base.reward(s, u, v) + 1.0);
                for next in 0..2 {
                    b.set_transition(s, u, v, next, base.transition_prob(s, u, v, next));
                }
            }
        }
    }
    let game = b.build().unwrap();
    let model = common::fdm(2, 2);
    let (_, table) = common::particles_and_table(&model, 30, 6);
    let beliefs = closed_beliefs(&table, 3);
    let ctx = BackupContext::new(&game, &table).unwrap();
    let mut alphas = AlphaSet::zero(2, 30);
    for _ in 0..15 {
        let next = sweep(&ctx, &beliefs, &alphas, PlanMode::PointBased, DEFAULT_EXPLOSION_CAP).unwrap();
        for s in 0..2 {
            for bel in beliefs.state(s) {
                assert!(next.value(s, &bel.weights) >= alphas.value(s, &bel.weights) - 1e-12);
            }
        }
        alphas = next;
    }
}

fn single_state_game(discount: f64) -> (StochasticGame, FdmModel) {
    let mut b = GameBuilder::new("single", 1, 1, 1).discount(discount);
    b.set_reward(0, 0, 0, 1.0);
    b.set_transition(0, 0, 0, 0, 1.0);
    (b.build().unwrap(), FdmModel::symmetric("fdm", 1, 1, 1.0).unwrap())
}

#[test]
fn constant_reward_sums_the_geometric_series() {
    let phi = 0.8;
    let (game, model) = single_state_game(phi);
    let particles = ParticleSet::draw(&model, 3, 0).unwrap();
    for mode in [PlanMode::Exact, PlanMode::PointBased] {
        for k in 0..8 {
            let config = PlannerConfig {
                mode,
                horizon: k,
                convergence_tol: 0.0,
                ..PlannerConfig::default()
            };
            let out = plan(&game, &model, &particles, &config).unwrap();
            let v = out.alphas.value(0, &[1.0 / 3.0; 3]);
            let expected: f64 = (0..k).map(|i| phi.powi(i as i32)).sum();
            assert!((v - expected).abs() < 1e-12, "{mode:?} k={k}: {v} vs {expected}");
        }
    }
}

#[test]
fn zero_horizon_plans_are_worth_nothing() {
    let env = build_chain_world().unwrap();
    let model = env.model.as_ref();
    let particles = ParticleSet::draw(model, 20, 1).unwrap();
    let config = PlannerConfig {
        horizon: 0,
        per_state_count: 4,
        depth: 5,
        rollouts: 50,
        ..PlannerConfig::default()
    };
    let out = plan(&env.game, model, &particles, &config).unwrap();
    let policy = Policy::new(&out.bundle, model).unwrap();
    for s in 0..env.game.num_states() {
        for b in out.bundle.beliefs.state(s) {
            assert!(policy.scores(s, &b.weights).iter().all(|&x| x == 0.0));
        }
    }
}

fn random_beliefs(table: &LikelihoodTable, count: usize, rng: &mut impl Rng) -> Vec<SampledBelief> {
    let mut out = vec![SampledBelief::prior(table)];
    while out.len() < count {
        let mut st = SufficientStats::new(table.num_states(), table.num_actions());
        for _ in 0..rng.random_range(1..8) {
            st.increment(rng.random_range(0..table.num_states()), rng.random_range(0..table.num_actions()))
                .unwrap();
        }
        if out.iter().all(|b| b.counts != st) {
            out.push(SampledBelief::new(st, table).unwrap());
        }
    }
    out
}

/// `J(c) = Σ_k (⟨Σ_i c_i Φ_i, b_k⟩ − ⟨α, b_k⟩)²`, computed from scratch.
fn objective(coeffs: &[f64], evals: &[f64], beliefs: &[SampledBelief]) -> f64 {
    let fitted = reconstruct(coeffs, beliefs);
    beliefs
        .iter()
        .map(|b| (mc_inner(&fitted, b).unwrap() - mc_inner(evals, b).unwrap()).powi(2))
        .sum()
}

#[test]
fn functions_in_the_span_are_recovered() {
    let model = common::fdm(2, 3);
    let (_, table) = common::particles_and_table(&model, 60, 8);
    let mut rng = rng_from(8, &[]);
    for _ in 0..20 {
        let beliefs = random_beliefs(&table, 4, &mut rng);
        let c: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
        let evals = reconstruct(&c, &beliefs);
        let p = project_alpha(&evals, &beliefs).unwrap();
        assert!(p.residual <= 1e-9);
        assert!(objective(&p.coeffs, &evals, &beliefs) <= 1e-9);
    }
}

#[test]
fn prior_only_projection_is_the_prior_mean() {
    let model = common::fdm(1, 2);
    let (_, table) = common::particles_and_table(&model, 10, 2);
    let evals: Vec<f64> = (0..10).map(|j| j as f64 * 0.5 - 1.0).collect();
    let prior = vec![SampledBelief::prior(&table)];
    let p = project_alpha(&evals, &prior).unwrap();
    assert!((p.coeffs[0] - mc_inner(&evals, &prior[0]).unwrap()).abs() < 1e-12);
}

#[test]
fn projections_beat_random_coefficients() {
    let model = common::fdm(2, 2);
    let (_, table) = common::particles_and_table(&model, 40, 12);
    let mut rng = rng_from(12, &[]);
    for _ in 0..20 {
        let beliefs = random_beliefs(&table, 4, &mut rng);
        let evals: Vec<f64> = (0..40).map(|_| rng.random_range(-3.0..3.0)).collect();
        let p = project_alpha(&evals, &beliefs).unwrap();
        let best = objective(&p.coeffs, &evals, &beliefs);
        for _ in 0..1000 {
            let probe: Vec<f64> = p.coeffs.iter().map(|c| c + rng.random_range(-1.0..1.0)).collect();
            assert!(best <= objective(&probe, &evals, &beliefs) + 1e-12);
        }
    }
}

#[test]
fn projection_solves_the_normal_equations() {
    let model = common::fdm(2, 2);
    let (_, table) = common::particles_and_table(&model, 50, 14);
    let mut rng = rng_from(14, &[]);
    for _ in 0..20 {
        let beliefs = random_beliefs(&table, 6, &mut rng);
        let sys = ProjectionSystem::new(&beliefs).unwrap();
        let a = sys.gram();
        assert!((a - a.transpose()).amax() <= 1e-9 * a.amax());
        let eig = a.clone().symmetric_eigen();
        assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-9 * a.amax()));

        let evals: Vec<f64> = (0..50).map(|_| rng.random_range(-3.0..3.0)).collect();
        let targets: Vec<f64> = beliefs.iter().map(|b| mc_inner(&evals, b).unwrap()).collect();
        let p = sys.solve(&targets).unwrap();
        let d = sys.rhs(&targets);
        let x = nalgebra::DVector::from_column_slice(&p.coeffs);
        let shifted = a + nalgebra::DMatrix::identity(a.nrows(), a.nrows()) * sys.ridge();
        assert!((shifted * x - &d).norm() <= 1e-8 * d.norm());
    }
}

fn small_chain_plan(seed: u64) -> (ibrl_core::environments::Environment, PolicyBundle) {
    let env = build_chain_world().unwrap();
    let particles = ParticleSet::draw(env.model.as_ref(), 50, seed).unwrap();
    let config = PlannerConfig {
        horizon: 15,
        per_state_count: 6,
        depth: 8,
        rollouts: 200,
        belief_seed: seed + 1,
        ..PlannerConfig::default()
    };
    let out = plan(&env.game, env.model.as_ref(), &particles, &config).unwrap();
    (env, out.bundle)
}

#[test]
fn bundles_round_trip_bit_for_bit() {
    let (_, bundle) = small_chain_plan(3);
    let bytes = bundle.to_bytes().unwrap();
    let back = PolicyBundle::from_bytes(&bytes).unwrap();
    assert_eq!(back, bundle);
    assert_eq!(back.to_bytes().unwrap(), bytes);
    assert_eq!(&bytes[..4], b"IBRL");
}

#[test]
fn identical_seeds_give_identical_bundles() {
    let a = small_chain_plan(5).1.to_bytes().unwrap();
    let b = small_chain_plan(5).1.to_bytes().unwrap();
    let c = small_chain_plan(6).1.to_bytes().unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn online_scores_at_the_prior_match_the_inner_products() {
    let (env, bundle) = small_chain_plan(7);
    let policy = Policy::new(&bundle, env.model.as_ref()).unwrap();
    let n = bundle.num_particles();
    let prior = vec![1.0 / n as f64; n];
    for s in 0..bundle.num_states {
        let beliefs = bundle.beliefs.state(s);
        let scores = policy.scores(s, &prior);
        let sp = &bundle.policies[s];
        for (i, score) in scores.iter().enumerate() {
            let evals = reconstruct(sp.row(i), beliefs);
            let direct = mc_inner(&evals, &beliefs[0]).unwrap();
            assert!((score - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
        }
        // with no observations the chosen action is the prior winner
        let winner = (0..sp.len())
            .max_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(sp.actions[b].cmp(&sp.actions[a])))
            .unwrap();
        assert_eq!(
            policy.select_action(&SufficientStats::new(5, 2), s).unwrap(),
            sp.actions[winner]
        );
    }
}

#[test]
fn single_action_games_always_pick_it() {
    let (game, model) = single_state_game(0.5);
    let particles = ParticleSet::draw(&model, 5, 0).unwrap();
    let out = plan(&game, &model, &particles, &PlannerConfig::default()).unwrap();
    let policy = Policy::new(&out.bundle, &model).unwrap();
    let mut psi = SufficientStats::new(1, 1);
    for _ in 0..5 {
        assert_eq!(policy.select_action(&psi, 0).unwrap(), 0);
        psi.increment(0, 0).unwrap();
    }
}

#[test]
fn one_belief_per_state_means_prior_only() {
    let env = build_chain_world().unwrap();
    let (_, table) = {
        let p = ParticleSet::draw(env.model.as_ref(), 10, 0).unwrap();
        let t = LikelihoodTable::build(env.model.as_ref(), &p).unwrap();
        (p, t)
    };
    let cfg = BeliefSamplingConfig {
        per_state_count: 1,
        depth: 10,
        rollouts: 100,
    };
    let set = sample_reachable_beliefs(&env.game, env.model.as_ref(), &table, &cfg, &mut rng_from(0, &[])).unwrap();
    for s in 0..5 {
        assert_eq!(set.state(s).len(), 1);
        assert!(set.state(s)[0].counts.is_empty());
    }
}

#[test]
fn depth_one_beliefs_carry_one_observation() {
    let mut b = GameBuilder::new("one", 1, 2, 3).discount(0.9);
    for u in 0..2 {
        for v in 0..3 {
            b.set_transition(0, u, v, 0, 1.0);
        }
    }
    let game = b.build().unwrap();
    let model = common::fdm(1, 3);
    let (_, table) = common::particles_and_table(&model, 10, 0);
    let cfg = BeliefSamplingConfig {
        per_state_count: 10,
        depth: 1,
        rollouts: 100,
    };
    let set = sample_reachable_beliefs(&game, &model, &table, &cfg, &mut rng_from(1, &[])).unwrap();
    assert!(set.state(0).len() > 1);
    assert!(set.state(0)[0].counts.is_empty());
    for bel in &set.state(0)[1..] {
        assert_eq!(bel.counts.total(), 1);
    }
}

/// Can some trajectory from the initial state, of exactly `ψ.total()` steps,
/// produce the histogram `ψ` and end in `target`?
fn realizable(game: &StochasticGame, psi: &SufficientStats, target: usize) -> bool {
    fn go(
        game: &StochasticGame,
        s: usize,
        left: &mut Vec<u32>,
        target: usize,
        memo: &mut HashMap<(usize, Vec<u32>), bool>,
    ) -> bool {
        if left.iter().all(|&c| c == 0) {
            return s == target;
        }
        if let Some(&r) = memo.get(&(s, left.clone())) {
            return r;
        }
        let nv = game.num_opponent_actions();
        let mut found = false;
        'outer: for v in 0..nv {
            if left[s * nv + v] == 0 {
                continue;
            }
            for u in 0..game.num_agent_actions() {
                for &(next, p) in game.successors(s, u, v) {
                    if p > 0.0 {
                        left[s * nv + v] -= 1;
                        let ok = go(game, next, left, target, memo);
                        left[s * nv + v] += 1;
                        if ok {
                            found = true;
                            break 'outer;
                        }
                    }
                }
            }
        }
        memo.insert((s, left.clone()), found);
        found
    }
    let nv = game.num_opponent_actions();
    let mut left: Vec<u32> = (0..game.num_states() * nv).map(|i| psi.get(i / nv, i % nv)).collect();
    go(game, game.initial_state(), &mut left, target, &mut HashMap::new())
}

#[test]
fn sampled_chain_beliefs_come_from_real_histories() {
    let env = build_chain_world().unwrap();
    let p = ParticleSet::draw(env.model.as_ref(), 20, 0).unwrap();
    let table = LikelihoodTable::build(env.model.as_ref(), &p).unwrap();
    let cfg = BeliefSamplingConfig {
        per_state_count: 16,
        depth: 10,
        rollouts: 500,
    };
    let set = sample_reachable_beliefs(&env.game, env.model.as_ref(), &table, &cfg, &mut rng_from(2, &[])).unwrap();
    for s in 0..5 {
        let list = set.state(s);
        assert!(list.len() <= 16);
        assert!(list[0].counts.is_empty());
        for (i, b) in list.iter().enumerate() {
            assert!(b.counts.total() <= 10);
            assert!(list[..i].iter().all(|o| o.counts != b.counts), "duplicate belief");
            if i > 0 {
                assert!(realizable(&env.game, &b.counts, s), "state {s}: {:?}", b.counts);
            }
        }
    }
}

#[test]
fn chain_prior_value_lies_between_particle_values() {
    let env = build_chain_world().unwrap();
    let model = env.model.as_ref();
    let particles = ParticleSet::draw(model, 200, 31).unwrap();
    let config = PlannerConfig {
        horizon: 60,
        per_state_count: 16,
        depth: 10,
        rollouts: 2000,
        belief_seed: 32,
        ..PlannerConfig::default()
    };
    let out = plan(&env.game, model, &particles, &config).unwrap();
    let bayes = out.alphas.value(0, &[1.0 / 200.0; 200]);
    let per_particle: Vec<f64> = particles
        .iter()
        .map(|p| value_iteration(&env.game, model, p, 1e-9).unwrap().value(0))
        .collect();
    let lo = per_particle.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = per_particle.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert!(lo <= bayes && bayes <= hi, "{bayes} outside [{lo}, {hi}]");
}

#[test]
fn concentrated_posterior_follows_the_oracle_at_the_intersection() {
    let env = build_environment("intersection-reduced").unwrap();
    let model = env.model.as_ref();
    let game = &env.game;
    let layout = IntersectionLayout::reduced();
    let particles = ParticleSet::draw(model, 100, 41).unwrap();
    let table = LikelihoodTable::build(model, &particles).unwrap();
    let config = PlannerConfig {
        belief_seed: 42,
        ..env.defaults.planner.clone()
    };
    let mut rng = rng_from(config.belief_seed, &[]);
    let beliefs = sample_reachable_beliefs(game, model, &table, &config.sampling(), &mut rng).unwrap();
    let out = plan_with_beliefs(game, model, &particles, &table, beliefs, &config).unwrap();
    let policy = Policy::new(&out.bundle, model).unwrap();

    // the true driver is one of the particles; script 50 observations of it
    let truth = particles.params()[0].clone();
    let oracle = value_iteration(game, model, &truth, 1e-9).unwrap();
    let mut rng = rng_from(43, &[]);
    let mut psi = SufficientStats::new(game.num_states(), game.num_opponent_actions());
    let mut probs = vec![0.0; game.num_opponent_actions()];
    let mut s = game.initial_state();
    let mut visited = Vec::new();
    for _ in 0..50 {
        let u = oracle.greedy(s);
        model.action_probs(&truth, s, &mut probs);
        let v = ibrl_core::planner::sample_index(&probs, rng.random::<f64>());
        psi.increment(s, v).unwrap();
        visited.push(s);
        s = game.sample_next(s, u, v, rng.random::<f64>());
    }

    // compare on the states a driving episode passes through
    let mut states: Vec<usize> = visited
        .into_iter()
        .filter(|&x| !layout.is_collision(layout.decode(x)))
        .collect();
    states.sort_unstable();
    states.dedup();
    let agree = states
        .iter()
        .filter(|&&x| {
            let q = oracle.row(x);
            let chosen = policy.select_action(&psi, x).unwrap();
            // equally good actions count as agreement
            q[chosen] >= q[oracle.greedy(x)] - 1e-9
        })
        .count();
    let rate = agree as f64 / states.len() as f64;
    assert!(rate >= 0.9, "agreement {rate:.3} over {} states", states.len());
}

#[test]
fn mc_inner_integrates_posterior_means() {
    let model = FdmModel::new("fdm", 1, 3, vec![1.0, 2.0, 0.5]).unwrap();
    let (particles, table) = common::particles_and_table(&model, 100_000, 50);
    let psi = SufficientStats::from_observations(1, 3, [(0, 0), (0, 0), (0, 2), (0, 1), (0, 0)]).unwrap();
    let b = SampledBelief::new(psi.clone(), &table).unwrap();
    for v in 0..3 {
        let g: Vec<f64> = particles.iter().map(|p| p.0[v]).collect();
        let est = mc_inner(&g, &b).unwrap();
        let se = b
            .weights
            .iter()
            .zip(&g)
            .map(|(w, x)| (w * (x - est)).powi(2))
            .sum::<f64>()
            .sqrt();
        let conc = [1.0, 2.0, 0.5];
        let oracle = (conc[v] + f64::from(psi.get(0, v))) / (3.5 + 5.0);
        assert!((est - oracle).abs() <= 3.0 * se, "{est} vs {oracle}");
    }
    let _ = <FdmModel as BehaviorModel>::num_states(&model);
}
