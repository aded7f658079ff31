//! Stochastic-game environment model and information-state mechanics.
//!
//! A [`StochasticGame`] is the tuple of states, agent actions, opponent
//! actions, rewards `r_s(u, v)`, transitions `p_s^{uv}(s')` and a discount.
//! Games with a history window `d > 0` are expanded eagerly into a game whose
//! state index *is* the information state `(s, h)`, so planners never need to
//! know whether they are looking at plain or history-augmented states.

use std::collections::{HashMap, VecDeque};

use sha2::{Digest, Sha256};

use crate::error::{check_index, IbrlError, Result};

const SIMPLEX_TOL: f64 = 1e-12;

/// One interaction `(s, u, v)`.
pub type Interaction = (usize, usize, usize);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InformationState {
    pub current_state: usize,
    /// Oldest interaction first; never longer than the game's history depth.
    pub history: Vec<Interaction>,
}

impl InformationState {
    pub fn plain(state: usize) -> Self {
        Self {
            current_state: state,
            history: Vec::new(),
        }
    }
}

/// Dense game tables. Built through [`GameBuilder`].
#[derive(Clone, Debug)]
pub struct StochasticGame {
    name: String,
    num_states: usize,
    num_agent_actions: usize,
    num_opponent_actions: usize,
    /// `[s][u][v]`
    reward: Vec<f64>,
    /// `[s][u][v][s']`
    transition: Vec<f64>,
    /// Nonzero entries of each transition row, `[s][u][v]`.
    successors: Vec<Vec<(usize, f64)>>,
    discount: f64,
    initial_state: usize,
    history_depth: usize,
    physical_states: usize,
    information_states: Vec<InformationState>,
    state_labels: Vec<String>,
}

impl StochasticGame {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of planning states (information states when `d > 0`).
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_agent_actions(&self) -> usize {
        self.num_agent_actions
    }

    pub fn num_opponent_actions(&self) -> usize {
        self.num_opponent_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn history_depth(&self) -> usize {
        self.history_depth
    }

    pub fn physical_states(&self) -> usize {
        self.physical_states
    }

    pub fn information_state(&self, index: usize) -> &InformationState {
        &self.information_states[index]
    }

    pub fn state_label(&self, index: usize) -> &str {
        &self.state_labels[index]
    }

    #[inline]
    fn ruv(&self, s: usize, u: usize, v: usize) -> usize {
        (s * self.num_agent_actions + u) * self.num_opponent_actions + v
    }

    #[inline]
    pub fn reward(&self, s: usize, u: usize, v: usize) -> f64 {
        self.reward[self.ruv(s, u, v)]
    }

    #[inline]
    pub fn transition_prob(&self, s: usize, u: usize, v: usize, next: usize) -> f64 {
        self.transition[self.ruv(s, u, v) * self.num_states + next]
    }

    /// Nonzero `(s', p)` pairs of the transition row for `(s, u, v)`.
    #[inline]
    pub fn successors(&self, s: usize, u: usize, v: usize) -> &[(usize, f64)] {
        &self.successors[self.ruv(s, u, v)]
    }

    fn check_joint(&self, s: usize, u: usize, v: usize) -> Result<()> {
        check_index("state", s, self.num_states)?;
        check_index("agent action", u, self.num_agent_actions)?;
        check_index("opponent action", v, self.num_opponent_actions)
    }

    /// The stored simplex row `p_s^{uv}(·)`.
    pub fn next_state_dist(&self, s: usize, u: usize, v: usize) -> Result<&[f64]> {
        self.check_joint(s, u, v)?;
        let start = self.ruv(s, u, v) * self.num_states;
        Ok(&self.transition[start..start + self.num_states])
    }

    /// Samples `s'` from `p_s^{uv}` given a uniform draw in `[0, 1)`.
    pub fn sample_next(&self, s: usize, u: usize, v: usize, uniform: f64) -> usize {
        let succ = self.successors(s, u, v);
        let mut acc = 0.0;
        for &(next, p) in succ {
            acc += p;
            if uniform < acc {
                return next;
            }
        }
        succ.last().map(|&(next, _)| next).unwrap_or(s)
    }

    /// Slides the history window: appends `(ŝ.current_state, u, v)`, keeps the
    /// last `d` triples and moves to `s'`. States and actions are physical.
    pub fn push_history(
        &self,
        info: &InformationState,
        next: usize,
        u: usize,
        v: usize,
    ) -> Result<InformationState> {
        check_index("state", info.current_state, self.physical_states)?;
        check_index("state", next, self.physical_states)?;
        check_index("agent action", u, self.num_agent_actions)?;
        check_index("opponent action", v, self.num_opponent_actions)?;
        if info.history.len() > self.history_depth {
            return Err(IbrlError::InvalidArgument(format!(
                "history of length {} exceeds depth {}",
                info.history.len(),
                self.history_depth
            )));
        }
        Ok(push_window(info, next, u, v, self.history_depth))
    }

    /// SHA-256 over the dimensions, discount and the bit patterns of all tables.
    pub fn descriptor_hash(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.name.as_bytes());
        for dim in [
            self.num_states,
            self.num_agent_actions,
            self.num_opponent_actions,
            self.initial_state,
            self.history_depth,
        ] {
            h.update((dim as u64).to_le_bytes());
        }
        h.update(self.discount.to_bits().to_le_bytes());
        for x in self.reward.iter().chain(self.transition.iter()) {
            h.update(x.to_bits().to_le_bytes());
        }
        let digest = h.finalize();
        let mut out = [0u8; 32];
        out.copy_from_slice(&digest);
        out
    }

    /// Largest absolute reward, used to bound value magnitudes.
    pub fn max_abs_reward(&self) -> f64 {
        self.reward.iter().fold(0.0_f64, |m, r| m.max(r.abs()))
    }
}

fn push_window(
    info: &InformationState,
    next: usize,
    u: usize,
    v: usize,
    depth: usize,
) -> InformationState {
    let mut history = info.history.clone();
    history.push((info.current_state, u, v));
    if history.len() > depth {
        let drop = history.len() - depth;
        history.drain(..drop);
    }
    InformationState {
        current_state: next,
        history,
    }
}

/// Assembles and validates a game; expands information states for `d > 0`.
#[derive(Clone, Debug)]
pub struct GameBuilder {
    name: String,
    num_states: usize,
    num_agent_actions: usize,
    num_opponent_actions: usize,
    reward: Vec<f64>,
    transition: Vec<f64>,
    discount: f64,
    initial_state: usize,
    history_depth: usize,
    state_labels: Option<Vec<String>>,
}

impl GameBuilder {
    pub fn new(name: &str, states: usize, agent_actions: usize, opponent_actions: usize) -> Self {
        let joints = states * agent_actions * opponent_actions;
        Self {
            name: name.to_string(),
            num_states: states,
            num_agent_actions: agent_actions,
            num_opponent_actions: opponent_actions,
            reward: vec![0.0; joints],
            transition: vec![0.0; joints * states],
            discount: 0.95,
            initial_state: 0,
            history_depth: 0,
            state_labels: None,
        }
    }

    pub fn discount(mut self, discount: f64) -> Self {
        self.discount = discount;
        self
    }

    pub fn initial_state(mut self, s: usize) -> Self {
        self.initial_state = s;
        self
    }

    pub fn history_depth(mut self, d: usize) -> Self {
        self.history_depth = d;
        self
    }

    pub fn state_labels(mut self, labels: Vec<String>) -> Self {
        self.state_labels = Some(labels);
        self
    }

    fn ruv(&self, s: usize, u: usize, v: usize) -> usize {
        (s * self.num_agent_actions + u) * self.num_opponent_actions + v
    }

    pub fn set_reward(&mut self, s: usize, u: usize, v: usize, r: f64) {
        let i = self.ruv(s, u, v);
        self.reward[i] = r;
    }

    pub fn set_transition(&mut self, s: usize, u: usize, v: usize, next: usize, p: f64) {
        let i = self.ruv(s, u, v) * self.num_states + next;
        self.transition[i] = p;
    }

    pub fn add_transition(&mut self, s: usize, u: usize, v: usize, next: usize, p: f64) {
        let i = self.ruv(s, u, v) * self.num_states + next;
        self.transition[i] += p;
    }

    pub fn build(self) -> Result<StochasticGame> {
        self.validate()?;
        if self.history_depth == 0 {
            Ok(self.finish_plain())
        } else {
            self.expand_information_states()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.num_states == 0 || self.num_agent_actions == 0 || self.num_opponent_actions == 0 {
            return Err(IbrlError::InvalidGame("empty state or action set".into()));
        }
        if !(self.discount > 0.0 && self.discount < 1.0) {
            return Err(IbrlError::InvalidGame(format!(
                "discount {} outside (0, 1)",
                self.discount
            )));
        }
        check_index("initial state", self.initial_state, self.num_states)?;
        if let Some(labels) = &self.state_labels {
            if labels.len() != self.num_states {
                return Err(IbrlError::InvalidGame("state label count mismatch".into()));
            }
        }
        if self.reward.iter().any(|r| !r.is_finite()) {
            return Err(IbrlError::InvalidGame("non-finite reward".into()));
        }
        let n = self.num_states;
        for (row_idx, row) in self.transition.chunks(n).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > SIMPLEX_TOL {
                let s = row_idx / (self.num_agent_actions * self.num_opponent_actions);
                let u = (row_idx / self.num_opponent_actions) % self.num_agent_actions;
                let v = row_idx % self.num_opponent_actions;
                return Err(IbrlError::InvalidGame(format!(
                    "transition row (s={s}, u={u}, v={v}) is not a distribution (sum {sum})"
                )));
            }
        }
        Ok(())
    }

    fn finish_plain(self) -> StochasticGame {
        let successors = sparse_rows(&self.transition, self.num_states);
        let labels = self
            .state_labels
            .unwrap_or_else(|| (0..self.num_states).map(|s| s.to_string()).collect());
        StochasticGame {
            name: self.name,
            num_states: self.num_states,
            num_agent_actions: self.num_agent_actions,
            num_opponent_actions: self.num_opponent_actions,
            reward: self.reward,
            transition: self.transition,
            successors,
            discount: self.discount,
            initial_state: self.initial_state,
            history_depth: 0,
            physical_states: self.num_states,
            information_states: (0..self.num_states).map(InformationState::plain).collect(),
            state_labels: labels,
        }
    }

    /// Breadth-first enumeration of information states reachable from the
    /// initial state with an empty history.
    fn expand_information_states(self) -> Result<StochasticGame> {
        let physical = self.finish_plain_tables();
        let depth = self.history_depth;
        let (nu, nv) = (self.num_agent_actions, self.num_opponent_actions);

        let start = InformationState::plain(self.initial_state);
        let mut index: HashMap<InformationState, usize> = HashMap::new();
        let mut states = vec![start.clone()];
        index.insert(start, 0);
        let mut queue = VecDeque::from([0usize]);
        let mut edges: Vec<Vec<(usize, f64)>> = Vec::new();

        while let Some(i) = queue.pop_front() {
            let info = states[i].clone();
            for u in 0..nu {
                for v in 0..nv {
                    let row = (info.current_state * nu + u) * nv + v;
                    let mut out = Vec::new();
                    for &(next, p) in &physical[row] {
                        let succ = push_window(&info, next, u, v, depth);
                        let j = match index.get(&succ) {
                            Some(&j) => j,
                            None => {
                                let j = states.len();
                                index.insert(succ.clone(), j);
                                states.push(succ);
                                queue.push_back(j);
                                j
                            }
                        };
                        out.push((j, p));
                    }
                    let slot = (i * nu + u) * nv + v;
                    if edges.len() <= slot {
                        edges.resize(slot + 1, Vec::new());
                    }
                    edges[slot] = out;
                }
            }
        }

        let ns = states.len();
        let mut reward = vec![0.0; ns * nu * nv];
        let mut transition = vec![0.0; ns * nu * nv * ns];
        for (i, info) in states.iter().enumerate() {
            for u in 0..nu {
                for v in 0..nv {
                    let slot = (i * nu + u) * nv + v;
                    reward[slot] = self.reward[(info.current_state * nu + u) * nv + v];
                    for &(j, p) in &edges[slot] {
                        transition[slot * ns + j] += p;
                    }
                }
            }
        }
        let labels = states
            .iter()
            .map(|info| {
                let base = self
                    .state_labels
                    .as_ref()
                    .map(|l| l[info.current_state].clone())
                    .unwrap_or_else(|| info.current_state.to_string());
                if info.history.is_empty() {
                    base
                } else {
                    let h: Vec<String> = info
                        .history
                        .iter()
                        .map(|(s, u, v)| format!("{s}:{u}{v}"))
                        .collect();
                    format!("{base}|{}", h.join(","))
                }
            })
            .collect();
        let successors = sparse_rows(&transition, ns);
        Ok(StochasticGame {
            name: self.name,
            num_states: ns,
            num_agent_actions: nu,
            num_opponent_actions: nv,
            reward,
            transition,
            successors,
            discount: self.discount,
            initial_state: 0,
            history_depth: depth,
            physical_states: self.num_states,
            information_states: states,
            state_labels: labels,
        })
    }

    fn finish_plain_tables(&self) -> Vec<Vec<(usize, f64)>> {
        sparse_rows(&self.transition, self.num_states)
    }
}

fn sparse_rows(transition: &[f64], num_states: usize) -> Vec<Vec<(usize, f64)>> {
    transition
        .chunks(num_states)
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(j, &p)| (j, p))
                .collect()
        })
        .collect()
}
