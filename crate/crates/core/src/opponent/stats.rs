use std::collections::BTreeMap;

use crate::error::{check_index, Result};

/// Observation counts `ψ_s^v` keyed by (information state, opponent action).
///
/// Stored sparsely: planners keep one of these per sampled belief and the
/// full `|S|·|V|` table would dominate memory on the larger environments.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SufficientStats {
    num_states: usize,
    num_actions: usize,
    counts: BTreeMap<(usize, usize), u32>,
    total: u64,
}

impl SufficientStats {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, state: usize, action: usize) -> u32 {
        self.counts.get(&(state, action)).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Nonzero entries in `(state, action)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.counts.iter().map(|(&(s, v), &c)| (s, v, c))
    }

    pub fn increment(&mut self, state: usize, action: usize) -> Result<()> {
        self.add(state, action, 1)
    }

    pub fn add(&mut self, state: usize, action: usize, count: u32) -> Result<()> {
        check_index("state", state, self.num_states)?;
        check_index("opponent action", action, self.num_actions)?;
        if count > 0 {
            *self.counts.entry((state, action)).or_insert(0) += count;
            self.total += u64::from(count);
        }
        Ok(())
    }

    /// Entrywise sum `ψ1 + ψ2`.
    pub fn merged(&self, other: &SufficientStats) -> Result<SufficientStats> {
        let mut out = self.clone();
        for (s, v, c) in other.iter() {
            out.add(s, v, c)?;
        }
        Ok(out)
    }

    /// Per-state totals `Σ_v ψ_s^v`.
    pub fn state_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.num_states];
        for (s, _, c) in self.iter() {
            totals[s] += u64::from(c);
        }
        totals
    }

    /// Counts from a trace of `(state, opponent action)` observations.
    pub fn from_observations(
        num_states: usize,
        num_actions: usize,
        observations: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut out = Self::new(num_states, num_actions);
        for (s, v) in observations {
            out.increment(s, v)?;
        }
        Ok(out)
    }
}

/// Returns `ψ` with `ψ_s^v` incremented by one.
pub fn update_counts(stats: &SufficientStats, state: usize, action: usize) -> Result<SufficientStats> {
    let mut out = stats.clone();
    out.increment(state, action)?;
    Ok(out)
}
