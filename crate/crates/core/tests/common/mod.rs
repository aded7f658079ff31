//! Small games and particle sets shared by the integration tests.

#![allow(dead_code)]

use ibrl_core::opponent::{FdmModel, LikelihoodTable};
use ibrl_core::rng::rng_from;
use ibrl_core::{BehaviorParams, GameBuilder, ParticleSet, StochasticGame, SufficientStats};
use rand::Rng;

/// Random dense game with every transition row a random simplex point.
pub fn random_game(states: usize, nu: usize, nv: usize, discount: f64, seed: u64) -> StochasticGame {
    let mut rng = rng_from(seed, &[]);
    let mut b = GameBuilder::new("random", states, nu, nv).discount(discount);
    for s in 0..states {
        for u in 0..nu {
            for v in 0..nv {
                b.set_reward(s, u, v, rng.random_range(-1.0..1.0));
                let mut row: Vec<f64> = (0..states).map(|_| rng.random::<f64>() + 0.05).collect();
                let sum: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= sum);
                // the last entry absorbs rounding so the row sums to one
                let head: f64 = row[..states - 1].iter().sum();
                row[states - 1] = 1.0 - head;
                for (next, p) in row.into_iter().enumerate() {
                    b.set_transition(s, u, v, next, p);
                }
            }
        }
    }
    b.build().unwrap()
}

/// The two-state, 2×2-action game used for the contraction and sandwich
/// checks.
pub fn toy_game(seed: u64) -> StochasticGame {
    random_game(2, 2, 2, 0.9, seed)
}

pub fn fdm(states: usize, actions: usize) -> FdmModel {
    FdmModel::symmetric("fdm", states, actions, 1.0).unwrap()
}

pub fn particles_and_table(model: &FdmModel, n: usize, seed: u64) -> (ParticleSet, LikelihoodTable) {
    let particles = ParticleSet::draw(model, n, seed).unwrap();
    let table = LikelihoodTable::build(model, &particles).unwrap();
    (particles, table)
}

/// Every count vector over `states × actions` with total at most `max_total`.
pub fn all_counts(states: usize, actions: usize, max_total: u32) -> Vec<SufficientStats> {
    let cells = states * actions;
    let mut out = Vec::new();
    let mut current = vec![0u32; cells];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for c in 0..=left {
            cur[i] = c;
            rec(i + 1, left - c, cur, out);
        }
        cur[i] = 0;
    }
    let mut raw = Vec::new();
    rec(0, max_total, &mut current, &mut raw);
    raw.sort_by_key(|c| c.iter().sum::<u32>());
    for c in raw {
        let mut st = SufficientStats::new(states, actions);
        for (k, &x) in c.iter().enumerate() {
            st.add(k / actions, k % actions, x).unwrap();
        }
        out.push(st);
    }
    out
}

/// Multinomial rows for a known FDM parameter vector.
pub fn fdm_params(rows: &[&[f64]]) -> BehaviorParams {
    BehaviorParams(rows.iter().flat_map(|r| r.iter().copied()).collect())
}
