//! α-function backups, evaluated pointwise on the particle set:
//!
//! `α_s^{ut}(λ) = Σ_v p_s^v(λ) (r_s(u,v) + φ Σ_{s'} α_{s'}^{t_{s'v}}(λ) p_s^{uv}(s'))`.

use rayon::prelude::*;

use super::alpha::{argmax, dot, AlphaFunction, AlphaSet, Provenance};
use super::belief::SampledBelief;
use super::prune::prune_indices;
use crate::error::{IbrlError, Result};
use crate::game::StochasticGame;
use crate::opponent::LikelihoodTable;

pub const DEFAULT_EXPLOSION_CAP: usize = 1_000_000;

const DUPLICATE_TOL: f64 = 1e-12;

/// A successor `s'` of `(s, v)` under at least one agent action.
#[derive(Clone, Debug)]
struct Branch {
    next: usize,
    /// `p_s^{uv}(s')` per agent action.
    probs: Vec<f64>,
}

/// Per-state quantities that do not change between sweeps.
#[derive(Clone, Debug)]
struct StateTerms {
    /// `Σ_v p_s^v(λ^j) r_s(u,v)` per agent action.
    reward: Vec<Vec<f64>>,
    /// Successor branches per opponent action.
    branches: Vec<Vec<Branch>>,
}

/// Game and particle tables shared by every backup.
#[derive(Clone, Debug)]
pub struct BackupContext<'a> {
    game: &'a StochasticGame,
    table: &'a LikelihoodTable,
    states: Vec<StateTerms>,
}

impl<'a> BackupContext<'a> {
    pub fn new(game: &'a StochasticGame, table: &'a LikelihoodTable) -> Result<Self> {
        if table.num_states() != game.num_states() || table.num_actions() != game.num_opponent_actions() {
            return Err(IbrlError::InvalidArgument(
                "likelihood table does not match the game dimensions".into(),
            ));
        }
        let (ns, nu, nv, n) = (
            game.num_states(),
            game.num_agent_actions(),
            game.num_opponent_actions(),
            table.num_particles(),
        );
        let states = (0..ns)
            .map(|s| {
                let reward = (0..nu)
                    .map(|u| {
                        let mut g = vec![0.0; n];
                        for v in 0..nv {
                            let r = game.reward(s, u, v);
                            for (gj, &p) in g.iter_mut().zip(table.row(s, v)) {
                                *gj += p * r;
                            }
                        }
                        g
                    })
                    .collect();
                let branches = (0..nv)
                    .map(|v| {
                        let mut out: Vec<Branch> = Vec::new();
                        for u in 0..nu {
                            for &(next, p) in game.successors(s, u, v) {
                                let pos = match out.iter().position(|b| b.next == next) {
                                    Some(pos) => pos,
                                    None => {
                                        out.push(Branch {
                                            next,
                                            probs: vec![0.0; nu],
                                        });
                                        out.len() - 1
                                    }
                                };
                                out[pos].probs[u] = p;
                            }
                        }
                        out.sort_by_key(|b| b.next);
                        out
                    })
                    .collect();
                StateTerms { reward, branches }
            })
            .collect();
        Ok(Self { game, table, states })
    }

    pub fn game(&self) -> &StochasticGame {
        self.game
    }

    pub fn table(&self) -> &LikelihoodTable {
        self.table
    }

    /// `Σ_v p_s^v(λ^j) r_s(u,v)` over particles.
    pub fn reward_term(&self, s: usize, u: usize) -> &[f64] {
        &self.states[s].reward[u]
    }

    fn check_prev(&self, prev: &AlphaSet) -> Result<()> {
        if prev.num_states() != self.game.num_states() {
            return Err(IbrlError::InvalidArgument("previous α-set has the wrong state count".into()));
        }
        for (s, set) in prev.states().iter().enumerate() {
            if set.is_empty() {
                return Err(IbrlError::InvalidArgument(format!("Γ_{s} is empty")));
            }
            if set.iter().any(|a| a.evals.len() != self.table.num_particles()) {
                return Err(IbrlError::InvalidArgument(format!("Γ_{s} has the wrong particle count")));
            }
        }
        Ok(())
    }

    /// `φ p_s^v(λ^j) α_{s'}^t(λ^j)` for every `t ∈ Γ_{s'}`.
    fn future_terms(&self, s: usize, v: usize, next: usize, prev: &AlphaSet) -> Vec<Vec<f64>> {
        let phi = self.game.discount();
        let lik = self.table.row(s, v);
        prev.state(next)
            .iter()
            .map(|a| a.evals.iter().zip(lik).map(|(x, p)| phi * p * x).collect())
            .collect()
    }
}

fn projected_terms(a: &AlphaFunction) -> u64 {
    a.coeffs.as_ref().map_or(a.terms, |c| c.len() as u64)
}

/// Symbolic term count of `α_s^{ut}` before projection: one reward term per
/// opponent action plus the successors' own terms.
fn term_count(ctx: &BackupContext<'_>, choices: &[(u32, u32, u32)], prev: &AlphaSet) -> u64 {
    let nv = ctx.game.num_opponent_actions() as u64;
    choices.iter().fold(nv, |acc, &(next, _, t)| {
        acc.saturating_add(projected_terms(&prev.state(next as usize)[t as usize]))
    })
}

/// Literal BACKUP: every `u` and every choice vector `t` over all `(s', v)`
/// pairs, `|U| · ∏_{s',v} |Γ_{s'}|` functions in total.
pub fn exact_backup(ctx: &BackupContext<'_>, s: usize, prev: &AlphaSet, cap: usize) -> Result<Vec<AlphaFunction>> {
    ctx.check_prev(prev)?;
    let game = ctx.game;
    let (ns, nu, nv, n) = (
        game.num_states(),
        game.num_agent_actions(),
        game.num_opponent_actions(),
        ctx.table.num_particles(),
    );
    let mut requested: u128 = nu as u128;
    for _ in 0..nv {
        for next in 0..ns {
            requested = requested.saturating_mul(prev.state(next).len() as u128);
        }
    }
    if requested > cap as u128 {
        return Err(IbrlError::Explosion { requested, cap });
    }

    // pairs in (v, s') order; terms only for successors with mass
    let pairs: Vec<(usize, usize)> = (0..nv).flat_map(|v| (0..ns).map(move |sp| (v, sp))).collect();
    let terms: Vec<Option<Vec<Vec<f64>>>> = pairs
        .iter()
        .map(|&(v, sp)| {
            ctx.states[s].branches[v]
                .iter()
                .any(|b| b.next == sp)
                .then(|| ctx.future_terms(s, v, sp, prev))
        })
        .collect();
    let radix: Vec<usize> = pairs.iter().map(|&(_, sp)| prev.state(sp).len()).collect();

    let mut out = Vec::with_capacity(requested as usize);
    for u in 0..nu {
        let mut t = vec![0usize; pairs.len()];
        loop {
            let mut evals = ctx.states[s].reward[u].clone();
            let mut choices = Vec::new();
            for (k, &(v, sp)) in pairs.iter().enumerate() {
                let p = game.transition_prob(s, u, v, sp);
                if p > 0.0 {
                    let h = &terms[k].as_ref().expect("successor terms")[t[k]];
                    for (e, x) in evals.iter_mut().zip(h) {
                        *e += p * x;
                    }
                    choices.push((sp as u32, v as u32, t[k] as u32));
                }
            }
            debug_assert_eq!(evals.len(), n);
            choices.sort_unstable();
            let terms = term_count(ctx, &choices, prev);
            out.push(AlphaFunction {
                evals,
                action: u,
                provenance: Provenance { action: u, choices },
                coeffs: None,
                terms,
            });
            // odometer, last pair fastest
            let mut advanced = false;
            for k in (0..pairs.len()).rev() {
                t[k] += 1;
                if t[k] < radix[k] {
                    advanced = true;
                    break;
                }
                t[k] = 0;
            }
            if !advanced {
                break;
            }
        }
    }
    Ok(out)
}

/// Exact backup by incremental pruning: the cross-sum over `(v, s')` pairs is
/// pruned after every step, which yields the same upper surface over the
/// particle simplex as pruning the literal enumeration.
pub fn exact_backup_pruned(
    ctx: &BackupContext<'_>,
    s: usize,
    prev: &AlphaSet,
    cap: usize,
) -> Result<Vec<AlphaFunction>> {
    ctx.check_prev(prev)?;
    let nu = ctx.game.num_agent_actions();
    let st = &ctx.states[s];
    let terms: Vec<Vec<Vec<Vec<f64>>>> = st
        .branches
        .iter()
        .enumerate()
        .map(|(v, bs)| bs.iter().map(|b| ctx.future_terms(s, v, b.next, prev)).collect())
        .collect();

    let mut all: Vec<(Vec<f64>, usize, Vec<(u32, u32, u32)>)> = Vec::new();
    for u in 0..nu {
        let mut set: Vec<(Vec<f64>, Vec<(u32, u32, u32)>)> = vec![(st.reward[u].clone(), Vec::new())];
        for (v, bs) in st.branches.iter().enumerate() {
            for (bi, b) in bs.iter().enumerate() {
                let p = b.probs[u];
                if p <= 0.0 {
                    continue;
                }
                let options = &terms[v][bi];
                let size = set.len() as u128 * options.len() as u128;
                if size > cap as u128 {
                    return Err(IbrlError::Explosion { requested: size, cap });
                }
                let mut next = Vec::with_capacity(size as usize);
                for (base, choices) in &set {
                    for (t, h) in options.iter().enumerate() {
                        let evals: Vec<f64> = base.iter().zip(h).map(|(a, x)| a + p * x).collect();
                        let mut c = choices.clone();
                        c.push((b.next as u32, v as u32, t as u32));
                        next.push((evals, c));
                    }
                }
                let refs: Vec<&[f64]> = next.iter().map(|(e, _)| e.as_slice()).collect();
                let keep = prune_indices(&refs);
                let mut slots: Vec<Option<_>> = next.into_iter().map(Some).collect();
                set = keep.into_iter().map(|i| slots[i].take().expect("kept once")).collect();
            }
        }
        all.extend(set.into_iter().map(|(e, c)| (e, u, c)));
    }
    let refs: Vec<&[f64]> = all.iter().map(|(e, _, _)| e.as_slice()).collect();
    let keep = prune_indices(&refs);
    let mut slots: Vec<Option<_>> = all.into_iter().map(Some).collect();
    Ok(keep
        .into_iter()
        .map(|i| {
            let (evals, u, mut choices) = slots[i].take().expect("kept once");
            choices.sort_unstable();
            let terms = term_count(ctx, &choices, prev);
            AlphaFunction {
                evals,
                action: u,
                provenance: Provenance { action: u, choices },
                coeffs: None,
                terms,
            }
        })
        .collect())
}

/// Value of `evals` at a sampled belief (self-normalized particle estimate).
#[inline]
pub fn belief_value(evals: &[f64], belief: &SampledBelief) -> f64 {
    dot(evals, &belief.weights)
}

/// PB-BACKUP: one α-function per sampled belief, deduplicated.
///
/// For belief `b`, each `(v, s')` pair takes the `t` maximizing
/// `⟨φ p_s^v α_{s'}^t, b⟩` (the choice does not depend on `u` because the
/// transition probability is a nonnegative scalar factor); the action is then
/// the `u` with the largest assembled value.
pub fn pb_backup(
    ctx: &BackupContext<'_>,
    s: usize,
    beliefs: &[SampledBelief],
    prev: &AlphaSet,
) -> Result<Vec<AlphaFunction>> {
    ctx.check_prev(prev)?;
    if beliefs.is_empty() {
        return Err(IbrlError::InvalidArgument(format!("B_{s} is empty")));
    }
    let n = ctx.table.num_particles();
    for b in beliefs {
        if b.weights.len() != n {
            return Err(IbrlError::InvalidArgument("belief has the wrong particle count".into()));
        }
        if !(b.phi_evals.iter().sum::<f64>() > 0.0) {
            return Err(IbrlError::DegenerateBelief);
        }
    }
    let nu = ctx.game.num_agent_actions();
    let st = &ctx.states[s];
    let terms: Vec<Vec<Vec<Vec<f64>>>> = st
        .branches
        .iter()
        .enumerate()
        .map(|(v, bs)| bs.iter().map(|b| ctx.future_terms(s, v, b.next, prev)).collect())
        .collect();

    let per_belief: Vec<AlphaFunction> = beliefs
        .par_iter()
        .map(|b| {
            let picks: Vec<Vec<usize>> = terms
                .iter()
                .map(|per_branch| {
                    per_branch
                        .iter()
                        .map(|options| argmax(options.iter().map(|h| belief_value(h, b))).0)
                        .collect()
                })
                .collect();
            let candidates: Vec<(Vec<f64>, Vec<(u32, u32, u32)>)> = (0..nu)
                .map(|u| {
                    let mut evals = st.reward[u].clone();
                    let mut choices = Vec::new();
                    for (v, bs) in st.branches.iter().enumerate() {
                        for (bi, br) in bs.iter().enumerate() {
                            let p = br.probs[u];
                            if p > 0.0 {
                                let t = picks[v][bi];
                                for (e, x) in evals.iter_mut().zip(&terms[v][bi][t]) {
                                    *e += p * x;
                                }
                                choices.push((br.next as u32, v as u32, t as u32));
                            }
                        }
                    }
                    choices.sort_unstable();
                    (evals, choices)
                })
                .collect();
            let (u, _) = argmax(candidates.iter().map(|(e, _)| belief_value(e, b)));
            let (evals, choices) = candidates.into_iter().nth(u).expect("u in range");
            let terms = term_count(ctx, &choices, prev);
            AlphaFunction {
                evals,
                action: u,
                provenance: Provenance { action: u, choices },
                coeffs: None,
                terms,
            }
        })
        .collect();

    let mut out: Vec<AlphaFunction> = Vec::with_capacity(per_belief.len());
    for a in per_belief {
        let dup = out.iter().any(|o| {
            o.action == a.action
                && o.evals
                    .iter()
                    .zip(&a.evals)
                    .all(|(x, y)| (x - y).abs() <= DUPLICATE_TOL)
        });
        if !dup {
            out.push(a);
        }
    }
    Ok(out)
}
