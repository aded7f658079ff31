//! Gipps car-following driver as a parametric opponent.

use rand::{Rng, RngCore};

use crate::error::{IbrlError, Result};
use crate::opponent::{BehaviorModel, BehaviorParams, ModelDescriptor};

pub const SPEED_LEVELS: usize = 5;
pub const MAX_SPEED: f64 = 4.0;

pub const ACCEL_RANGE: (f64, f64) = (0.5, 3.0);
pub const DECEL_RANGE: (f64, f64) = (-3.0, -0.5);
pub const REACTION_RANGE: (f64, f64) = (0.5, 2.0);
pub const IMPERFECTION_RANGE: (f64, f64) = (0.0, 1.0);

/// Below this width the speed uniform is treated as a point mass.
const POINT_WIDTH: f64 = 1e-12;

/// Driver parameters. `decel` is negative; the braking formula uses `|decel|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GippsParams {
    pub accel: f64,
    pub decel: f64,
    pub reaction: f64,
    pub imperfection: f64,
}

impl GippsParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("acceleration", self.accel, ACCEL_RANGE),
            ("deceleration", self.decel, DECEL_RANGE),
            ("reaction time", self.reaction, REACTION_RANGE),
            ("imperfection", self.imperfection, IMPERFECTION_RANGE),
        ];
        for (name, x, (lo, hi)) in checks {
            if !(lo..=hi).contains(&x) {
                return Err(IbrlError::Domain(format!("{name} {x} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn to_params(self) -> BehaviorParams {
        BehaviorParams(vec![self.accel, self.decel, self.reaction, self.imperfection])
    }

    pub fn from_params(p: &BehaviorParams) -> Result<Self> {
        match p.as_slice() {
            &[accel, decel, reaction, imperfection] => {
                let g = Self {
                    accel,
                    decel,
                    reaction,
                    imperfection,
                };
                g.validate()?;
                Ok(g)
            }
            other => Err(IbrlError::Domain(format!("Gipps expects 4 parameters, got {}", other.len()))),
        }
    }

    /// Midpoints of the prior ranges.
    pub fn prior_mean() -> Self {
        let mid = |(lo, hi): (f64, f64)| 0.5 * (lo + hi);
        Self {
            accel: mid(ACCEL_RANGE),
            decel: mid(DECEL_RANGE),
            reaction: mid(REACTION_RANGE),
            imperfection: mid(IMPERFECTION_RANGE),
        }
    }
}

/// `v_safe = S + (D − τS)/(S/|d| + τ)`, clamped at zero.
pub fn safe_speed(speed: f64, distance: f64, p: &GippsParams) -> f64 {
    let s = speed;
    let v = s + (distance - p.reaction * s) / (s / p.decel.abs() + p.reaction);
    v.max(0.0)
}

/// `v_des = min(4, S + a, v_safe)`.
pub fn desired_speed(speed: f64, distance: f64, p: &GippsParams) -> f64 {
    MAX_SPEED.min(speed + p.accel).min(safe_speed(speed, distance, p))
}

/// Next-speed distribution over levels `0..=4`: `Uniform(max(0, v_des − σa), v_des)`
/// with level `k` receiving the mass of `[k − 0.5, k + 0.5)`.
pub fn gipps_next_speed_dist(speed: usize, distance: f64, p: &GippsParams) -> Result<[f64; SPEED_LEVELS]> {
    p.validate()?;
    if speed >= SPEED_LEVELS {
        return Err(IbrlError::IndexOutOfRange {
            what: "speed level",
            index: speed,
            size: SPEED_LEVELS,
        });
    }
    if !(distance >= 0.0) {
        return Err(IbrlError::Domain(format!("negative distance {distance}")));
    }
    Ok(speed_dist(speed, distance, p))
}

fn speed_dist(speed: usize, distance: f64, p: &GippsParams) -> [f64; SPEED_LEVELS] {
    let hi = desired_speed(speed as f64, distance, p);
    let lo = (hi - p.imperfection * p.accel).max(0.0);
    let mut out = [0.0; SPEED_LEVELS];
    if hi - lo < POINT_WIDTH {
        let k = ((hi + 0.5).floor() as usize).min(SPEED_LEVELS - 1);
        out[k] = 1.0;
        return out;
    }
    for (k, o) in out.iter_mut().enumerate() {
        let a = (k as f64 - 0.5).max(lo);
        let b = (k as f64 + 0.5).min(hi);
        *o = (b - a).max(0.0);
    }
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= sum);
    out
}

/// What the driver sees in one game state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DriverContext {
    Driving { speed: usize, distance: f64 },
    /// States where the driver's choice has no effect (e.g. after a crash).
    Inert,
}

/// Gipps driver over a game's states. A small `noise` floor mixes in a
/// uniform speed choice so that no observation is impossible under any
/// parameter vector.
#[derive(Clone, Debug)]
pub struct GippsModel {
    name: String,
    contexts: Vec<DriverContext>,
    noise: f64,
}

impl GippsModel {
    pub fn new(name: &str, contexts: Vec<DriverContext>, noise: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&noise) {
            return Err(IbrlError::InvalidArgument(format!("noise floor {noise} outside [0, 1)")));
        }
        Ok(Self {
            name: name.to_string(),
            contexts,
            noise,
        })
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn context(&self, state: usize) -> DriverContext {
        self.contexts[state]
    }
}

impl BehaviorModel for GippsModel {
    fn descriptor(&self) -> ModelDescriptor {
        ModelDescriptor {
            name: self.name.clone(),
            param_dim: 4,
        }
    }

    fn num_states(&self) -> usize {
        self.contexts.len()
    }

    fn num_actions(&self) -> usize {
        SPEED_LEVELS
    }

    fn validate(&self, params: &BehaviorParams) -> Result<()> {
        GippsParams::from_params(params).map(|_| ())
    }

    fn action_probs(&self, params: &BehaviorParams, state: usize, out: &mut [f64]) {
        match self.contexts[state] {
            DriverContext::Inert => out.fill(1.0 / SPEED_LEVELS as f64),
            DriverContext::Driving { speed, distance } => {
                let p = GippsParams::from_params(params).expect("validated parameters");
                let dist = speed_dist(speed, distance, &p);
                let floor = self.noise / SPEED_LEVELS as f64;
                for (o, d) in out.iter_mut().zip(dist) {
                    *o = (1.0 - self.noise) * d + floor;
                }
            }
        }
    }

    fn prior_sample(&self, rng: &mut dyn RngCore) -> BehaviorParams {
        let mut draw = |(lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
        GippsParams {
            accel: draw(ACCEL_RANGE),
            decel: draw(DECEL_RANGE),
            reaction: draw(REACTION_RANGE),
            imperfection: draw(IMPERFECTION_RANGE),
        }
        .to_params()
    }

    fn prior_mean(&self) -> BehaviorParams {
        GippsParams::prior_mean().to_params()
    }

    fn clamp(&self, params: &BehaviorParams) -> BehaviorParams {
        let get = |i: usize, (lo, hi): (f64, f64)| {
            params.0.get(i).copied().filter(|x| x.is_finite()).unwrap_or(0.5 * (lo + hi)).clamp(lo, hi)
        };
        GippsParams {
            accel: get(0, ACCEL_RANGE),
            decel: get(1, DECEL_RANGE),
            reaction: get(2, REACTION_RANGE),
            imperfection: get(3, IMPERFECTION_RANGE),
        }
        .to_params()
    }
}
