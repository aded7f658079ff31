//! Serialized planner output.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! "IBRL" | version u16 | variant u8 | game hash [32]
//! model name (u32 len + utf8) | states, agent actions, opponent actions,
//!     particles, param dim (u64 each)
//! metadata | particle seed u64 | particle params (f64 × n × dim)
//! per state: belief count u32, then per belief:
//!     nnz u32, (s u32, v u32, count u32) × nnz, log scale f64, Φ evals f64 × n
//! per state: α count u32, width u32, action tags u32 × count,
//!     coefficients f64 × count × width (row-major)
//! ```
//!
//! Floats are stored by bit pattern, so a round trip is bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::belief::{SampledBelief, SampledBeliefSet};
use crate::error::{IbrlError, Result};
use crate::opponent::{BehaviorParams, ParticleSet, SufficientStats};

const MAGIC: &[u8; 4] = b"IBRL";
pub const FORMAT_VERSION: u16 = 1;

/// What the per-state coefficient rows mean.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BundleVariant {
    /// Coefficients over the state's belief basis `{Φ_s^i}` (width `|B_s|`).
    PhiBasis,
    /// Indicator basis over particles: one value per particle (width `n`).
    Indicator,
}

impl BundleVariant {
    fn tag(self) -> u8 {
        match self {
            BundleVariant::PhiBasis => 0,
            BundleVariant::Indicator => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(BundleVariant::PhiBasis),
            1 => Ok(BundleVariant::Indicator),
            other => Err(IbrlError::Bundle(format!("unknown variant tag {other}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanMode {
    Exact,
    PointBased,
}

impl PlanMode {
    fn tag(self) -> u8 {
        match self {
            PlanMode::Exact => 0,
            PlanMode::PointBased => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(PlanMode::Exact),
            1 => Ok(PlanMode::PointBased),
            other => Err(IbrlError::Bundle(format!("unknown mode tag {other}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanMetadata {
    pub mode: PlanMode,
    /// Requested horizon.
    pub horizon: u32,
    /// Sweeps actually run (early stop may cut it short).
    pub sweeps: u32,
    pub particle_seed: u64,
    pub belief_seed: u64,
    pub per_state_count: u32,
    pub depth: u32,
    pub rollouts: u32,
    pub convergence_tol: f64,
    pub explosion_cap: u64,
    pub carry_projected: bool,
    /// Sup-change over sampled beliefs after each sweep.
    pub sweep_log: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatePolicy {
    pub actions: Vec<usize>,
    pub width: usize,
    /// Row-major `actions.len() × width`.
    pub coeffs: Vec<f64>,
}

impl StatePolicy {
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.coeffs[i * self.width..(i + 1) * self.width]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyBundle {
    pub variant: BundleVariant,
    pub game_hash: [u8; 32],
    pub model_name: String,
    pub num_states: usize,
    pub num_agent_actions: usize,
    pub num_opponent_actions: usize,
    pub param_dim: usize,
    pub particles: ParticleSet,
    pub beliefs: SampledBeliefSet,
    pub policies: Vec<StatePolicy>,
    pub metadata: PlanMetadata,
}

impl PolicyBundle {
    pub fn num_particles(&self) -> usize {
        self.particles.len()
    }

    /// Checks that every table agrees with the header dimensions.
    pub fn validate(&self) -> Result<()> {
        let n = self.particles.len();
        let bad = |msg: String| Err(IbrlError::Bundle(msg));
        if n == 0 {
            return bad("no particles".into());
        }
        if self.particles.iter().any(|p| p.len() != self.param_dim) {
            return bad("particle dimension mismatch".into());
        }
        if self.beliefs.num_states() != self.num_states || self.policies.len() != self.num_states {
            return bad("state count mismatch".into());
        }
        for (s, (beliefs, policy)) in self.beliefs.states().iter().zip(&self.policies).enumerate() {
            if beliefs.iter().any(|b| b.phi_evals.len() != n) {
                return bad(format!("belief of state {s} has the wrong particle count"));
            }
            let width = match self.variant {
                BundleVariant::PhiBasis => beliefs.len(),
                BundleVariant::Indicator => n,
            };
            if policy.width != width || policy.coeffs.len() != policy.actions.len() * width {
                return bad(format!("coefficient matrix of state {s} has the wrong shape"));
            }
            if policy.is_empty() {
                return bad(format!("state {s} has no α-functions"));
            }
            if policy.actions.iter().any(|&u| u >= self.num_agent_actions) {
                return bad(format!("state {s} has an out-of-range action tag"));
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut w = Vec::new();
        w.extend_from_slice(MAGIC);
        w.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        w.push(self.variant.tag());
        w.extend_from_slice(&self.game_hash);
        put_u32(&mut w, self.model_name.len() as u32);
        w.extend_from_slice(self.model_name.as_bytes());
        for dim in [
            self.num_states,
            self.num_agent_actions,
            self.num_opponent_actions,
            self.particles.len(),
            self.param_dim,
        ] {
            put_u64(&mut w, dim as u64);
        }

        let m = &self.metadata;
        w.push(m.mode.tag());
        put_u32(&mut w, m.horizon);
        put_u32(&mut w, m.sweeps);
        put_u64(&mut w, m.particle_seed);
        put_u64(&mut w, m.belief_seed);
        put_u32(&mut w, m.per_state_count);
        put_u32(&mut w, m.depth);
        put_u32(&mut w, m.rollouts);
        put_f64(&mut w, m.convergence_tol);
        put_u64(&mut w, m.explosion_cap);
        w.push(u8::from(m.carry_projected));
        put_u32(&mut w, m.sweep_log.len() as u32);
        m.sweep_log.iter().for_each(|&x| put_f64(&mut w, x));

        put_u64(&mut w, self.particles.seed());
        for p in self.particles.iter() {
            p.0.iter().for_each(|&x| put_f64(&mut w, x));
        }

        for beliefs in self.beliefs.states() {
            put_u32(&mut w, beliefs.len() as u32);
            for b in beliefs {
                let entries: Vec<_> = b.counts.iter().collect();
                put_u32(&mut w, entries.len() as u32);
                for (s, v, c) in entries {
                    put_u32(&mut w, s as u32);
                    put_u32(&mut w, v as u32);
                    put_u32(&mut w, c);
                }
                put_f64(&mut w, b.log_scale);
                b.phi_evals.iter().for_each(|&x| put_f64(&mut w, x));
            }
        }

        for policy in &self.policies {
            put_u32(&mut w, policy.actions.len() as u32);
            put_u32(&mut w, policy.width as u32);
            policy.actions.iter().for_each(|&u| put_u32(&mut w, u as u32));
            policy.coeffs.iter().for_each(|&x| put_f64(&mut w, x));
        }
        Ok(w)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(IbrlError::Bundle("missing IBRL magic".into()));
        }
        let version = u16::from_le_bytes(r.take(2)?.try_into().expect("2 bytes"));
        if version != FORMAT_VERSION {
            return Err(IbrlError::Bundle(format!("unsupported format version {version}")));
        }
        let variant = BundleVariant::from_tag(r.u8()?)?;
        let mut game_hash = [0u8; 32];
        game_hash.copy_from_slice(r.take(32)?);
        let name_len = r.u32()? as usize;
        let model_name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| IbrlError::Bundle("model name is not utf-8".into()))?;
        let num_states = r.len_u64()?;
        let num_agent_actions = r.len_u64()?;
        let num_opponent_actions = r.len_u64()?;
        let n = r.len_u64()?;
        let param_dim = r.len_u64()?;

        let mode = PlanMode::from_tag(r.u8()?)?;
        let horizon = r.u32()?;
        let sweeps = r.u32()?;
        let particle_seed = r.u64()?;
        let belief_seed = r.u64()?;
        let per_state_count = r.u32()?;
        let depth = r.u32()?;
        let rollouts = r.u32()?;
        let convergence_tol = r.f64()?;
        let explosion_cap = r.u64()?;
        let carry_projected = r.u8()? != 0;
        let log_len = r.u32()? as usize;
        let sweep_log = r.f64s(log_len)?;
        let metadata = PlanMetadata {
            mode,
            horizon,
            sweeps,
            particle_seed,
            belief_seed,
            per_state_count,
            depth,
            rollouts,
            convergence_tol,
            explosion_cap,
            carry_projected,
            sweep_log,
        };

        let seed = r.u64()?;
        let params = (0..n)
            .map(|_| r.f64s(param_dim).map(BehaviorParams))
            .collect::<Result<Vec<_>>>()?;
        let particles = ParticleSet::new(params, seed);

        let mut per_state = Vec::with_capacity(num_states);
        for _ in 0..num_states {
            let count = r.u32()? as usize;
            let mut beliefs = Vec::with_capacity(count);
            for _ in 0..count {
                let nnz = r.u32()? as usize;
                let mut counts = SufficientStats::new(num_states, num_opponent_actions);
                for _ in 0..nnz {
                    let (s, v, c) = (r.u32()? as usize, r.u32()? as usize, r.u32()?);
                    counts
                        .add(s, v, c)
                        .map_err(|e| IbrlError::Bundle(format!("belief counts: {e}")))?;
                }
                let log_scale = r.f64()?;
                let phi = r.f64s(n)?;
                beliefs.push(
                    SampledBelief::from_parts(counts, phi, log_scale)
                        .map_err(|e| IbrlError::Bundle(format!("stored belief: {e}")))?,
                );
            }
            per_state.push(beliefs);
        }
        let beliefs = SampledBeliefSet::from_states(per_state)
            .map_err(|e| IbrlError::Bundle(e.to_string()))?;

        let mut policies = Vec::with_capacity(num_states);
        for _ in 0..num_states {
            let count = r.u32()? as usize;
            let width = r.u32()? as usize;
            let actions = (0..count)
                .map(|_| r.u32().map(|u| u as usize))
                .collect::<Result<Vec<_>>>()?;
            let coeffs = r.f64s(count * width)?;
            policies.push(StatePolicy { actions, width, coeffs });
        }
        if r.pos != bytes.len() {
            return Err(IbrlError::Bundle(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let bundle = Self {
            variant,
            game_hash,
            model_name,
            num_states,
            num_agent_actions,
            num_opponent_actions,
            param_dim,
            particles,
            beliefs,
            policies,
            metadata,
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(&self.to_bytes()?)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

fn put_u32(w: &mut Vec<u8>, x: u32) {
    w.extend_from_slice(&x.to_le_bytes());
}

fn put_u64(w: &mut Vec<u8>, x: u64) {
    w.extend_from_slice(&x.to_le_bytes());
}

fn put_f64(w: &mut Vec<u8>, x: f64) {
    w.extend_from_slice(&x.to_bits().to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(len)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| IbrlError::Bundle("truncated file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn len_u64(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| IbrlError::Bundle("dimension overflows usize".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn f64s(&mut self, len: usize) -> Result<Vec<f64>> {
        let bytes = self.take(len.checked_mul(8).ok_or_else(|| IbrlError::Bundle("length overflow".into()))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().expect("8 bytes"))))
            .collect())
    }
}
