/// Which previous-horizon α-function was chosen for each reachable
/// `(s', v)` pair, plus the root action.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Provenance {
    pub action: usize,
    /// `(s', v, t_{s'v})`, only for pairs with positive transition mass.
    pub choices: Vec<(u32, u32, u32)>,
}

/// An α-function carried as its values `α(λ^j)` on the particle set.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaFunction {
    pub evals: Vec<f64>,
    pub action: usize,
    pub provenance: Provenance,
    /// Projection coefficients over the owning state's belief basis.
    pub coeffs: Option<Vec<f64>>,
    /// Number of Φ-terms the symbolic form would carry before projection.
    pub terms: u64,
}

impl AlphaFunction {
    /// The horizon-0 α-function, identically zero.
    pub fn zero(num_particles: usize) -> Self {
        Self {
            evals: vec![0.0; num_particles],
            action: 0,
            provenance: Provenance::default(),
            coeffs: None,
            terms: 0,
        }
    }

    /// `Σ_j w_j α(λ^j)` for normalized particle weights `w`.
    #[inline]
    pub fn value(&self, weights: &[f64]) -> f64 {
        dot(&self.evals, weights)
    }
}

/// `Γ_s` for every state.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSet {
    per_state: Vec<Vec<AlphaFunction>>,
}

impl AlphaSet {
    /// Horizon-0 sets: one zero α-function per state.
    pub fn zero(num_states: usize, num_particles: usize) -> Self {
        Self {
            per_state: vec![vec![AlphaFunction::zero(num_particles)]; num_states],
        }
    }

    pub fn from_states(per_state: Vec<Vec<AlphaFunction>>) -> Self {
        Self { per_state }
    }

    pub fn num_states(&self) -> usize {
        self.per_state.len()
    }

    pub fn state(&self, s: usize) -> &[AlphaFunction] {
        &self.per_state[s]
    }

    pub fn states(&self) -> &[Vec<AlphaFunction>] {
        &self.per_state
    }

    pub fn into_states(self) -> Vec<Vec<AlphaFunction>> {
        self.per_state
    }

    /// `max_α ⟨α, b⟩` with the maximizing index (lowest index on ties).
    pub fn best(&self, s: usize, weights: &[f64]) -> (usize, f64) {
        argmax(self.per_state[s].iter().map(|a| a.value(weights)))
    }

    pub fn value(&self, s: usize, weights: &[f64]) -> f64 {
        self.best(s, weights).1
    }

    pub fn total_size(&self) -> usize {
        self.per_state.iter().map(Vec::len).sum()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// First index of the maximum; strict `>` keeps the lowest index on ties.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}
