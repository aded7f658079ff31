//! Two vehicles approaching an unsignalized intersection.
//!
//! Each vehicle follows its own path of `L` cells (5 m each); the paths cross
//! at the conflict cell `c = L / 2`. Our vehicle (A) picks an acceleration in
//! `{+1, 0, −1}` m/s²; the other vehicle (B) picks its next speed level via
//! the Gipps model. A vehicle at speed `S` advances one cell per step with
//! probability `S / 5`. A crosses by entering the last cell, which pays +50
//! and resets the scene; both vehicles in the conflict cell is a collision
//! (−250) after which the game sits in an absorbing zero-reward state.

use std::sync::Arc;

use super::gipps::{DriverContext, GippsModel, SPEED_LEVELS};
use super::{Environment, EnvironmentDefaults};
use crate::error::Result;
use crate::game::GameBuilder;
use crate::planner::PlannerConfig;

pub const CELL_METERS: f64 = 5.0;
pub const STEP_REWARD: f64 = -1.0;
pub const CROSSING_REWARD: f64 = 50.0;
pub const COLLISION_REWARD: f64 = -250.0;
pub const DISCOUNT: f64 = 0.99;
/// Headway reported to the driver once either vehicle is past the conflict.
pub const CLEAR_DISTANCE: f64 = 100.0;
pub const DEFAULT_NOISE: f64 = 0.01;

/// Agent actions: accelerate, keep speed, brake.
pub const ACCELERATIONS: [i64; 3] = [1, 0, -1];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IntersectionState {
    pub pos_a: usize,
    pub pos_b: usize,
    pub speed_a: usize,
    pub speed_b: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntersectionLayout {
    pub cells: usize,
    pub start_speed_a: usize,
    pub start_speed_b: usize,
}

impl IntersectionLayout {
    pub fn full() -> Self {
        Self {
            cells: 6,
            start_speed_a: 2,
            start_speed_b: 2,
        }
    }

    pub fn reduced() -> Self {
        Self { cells: 4, ..Self::full() }
    }

    pub fn conflict(&self) -> usize {
        self.cells / 2
    }

    pub fn destination(&self) -> usize {
        self.cells - 1
    }

    pub fn num_states(&self) -> usize {
        self.cells * self.cells * SPEED_LEVELS * SPEED_LEVELS
    }

    pub fn index(&self, st: IntersectionState) -> usize {
        ((st.pos_a * self.cells + st.pos_b) * SPEED_LEVELS + st.speed_a) * SPEED_LEVELS + st.speed_b
    }

    pub fn decode(&self, index: usize) -> IntersectionState {
        let speed_b = index % SPEED_LEVELS;
        let rest = index / SPEED_LEVELS;
        let speed_a = rest % SPEED_LEVELS;
        let rest = rest / SPEED_LEVELS;
        IntersectionState {
            pos_a: rest / self.cells,
            pos_b: rest % self.cells,
            speed_a,
            speed_b,
        }
    }

    pub fn start(&self) -> IntersectionState {
        IntersectionState {
            pos_a: 0,
            pos_b: 0,
            speed_a: self.start_speed_a,
            speed_b: self.start_speed_b,
        }
    }

    pub fn is_collision(&self, st: IntersectionState) -> bool {
        st.pos_a == self.conflict() && st.pos_b == self.conflict()
    }

    /// Headway the driver of B perceives. A is treated as a leader projected
    /// onto B's path: while A is strictly closer to the conflict cell, the gap
    /// is B's remaining distance minus A's. Otherwise (B ahead, or either
    /// vehicle past the conflict) the road is clear.
    pub fn distance(&self, st: IntersectionState) -> f64 {
        let c = self.conflict();
        if st.pos_a <= c && st.pos_b <= c && st.pos_a > st.pos_b {
            CELL_METERS * (st.pos_a - st.pos_b) as f64
        } else {
            CLEAR_DISTANCE
        }
    }

    pub fn driver_context(&self, index: usize) -> DriverContext {
        let st = self.decode(index);
        if self.is_collision(st) || st.pos_a == self.destination() {
            DriverContext::Inert
        } else {
            DriverContext::Driving {
                speed: st.speed_b,
                distance: self.distance(st),
            }
        }
    }
}

/// Probability that a vehicle at speed level `speed` advances one cell.
pub fn advance_probability(speed: usize) -> f64 {
    speed as f64 / CELL_METERS
}

pub fn build_intersection(reduced: bool) -> Result<Environment> {
    let layout = if reduced {
        IntersectionLayout::reduced()
    } else {
        IntersectionLayout::full()
    };
    build_intersection_with(layout, DEFAULT_NOISE)
}

pub fn build_intersection_with(layout: IntersectionLayout, noise: f64) -> Result<Environment> {
    let ns = layout.num_states();
    let name = match layout.cells {
        6 => "intersection".to_string(),
        4 => "intersection-reduced".to_string(),
        n => format!("intersection-{n}"),
    };
    let start = layout.index(layout.start());
    let labels = (0..ns)
        .map(|i| {
            let st = layout.decode(i);
            format!("A{}B{}:{}{}", st.pos_a, st.pos_b, st.speed_a, st.speed_b)
        })
        .collect();
    let mut b = GameBuilder::new(&name, ns, ACCELERATIONS.len(), SPEED_LEVELS)
        .discount(DISCOUNT)
        .initial_state(start)
        .state_labels(labels);
    for s in 0..ns {
        let st = layout.decode(s);
        for (u, &acc) in ACCELERATIONS.iter().enumerate() {
            for v in 0..SPEED_LEVELS {
                if layout.is_collision(st) {
                    b.set_transition(s, u, v, s, 1.0);
                    continue;
                }
                if st.pos_a == layout.destination() {
                    // never entered: crossing resets immediately
                    b.set_transition(s, u, v, start, 1.0);
                    continue;
                }
                let speed_a = (st.speed_a as i64 + acc).clamp(0, (SPEED_LEVELS - 1) as i64) as usize;
                let pa = advance_probability(speed_a);
                let pb = if st.pos_b < layout.destination() {
                    advance_probability(v)
                } else {
                    0.0
                };
                let mut reward = STEP_REWARD;
                for (step_a, prob_a) in [(0, 1.0 - pa), (1, pa)] {
                    for (step_b, prob_b) in [(0, 1.0 - pb), (1, pb)] {
                        let p = prob_a * prob_b;
                        if p <= 0.0 {
                            continue;
                        }
                        let next = IntersectionState {
                            pos_a: st.pos_a + step_a,
                            pos_b: st.pos_b + step_b,
                            speed_a,
                            speed_b: v,
                        };
                        if next.pos_a == layout.destination() {
                            reward += p * CROSSING_REWARD;
                            b.add_transition(s, u, v, start, p);
                        } else {
                            if layout.is_collision(next) {
                                reward += p * COLLISION_REWARD;
                            }
                            b.add_transition(s, u, v, layout.index(next), p);
                        }
                    }
                }
                b.set_reward(s, u, v, reward);
            }
        }
    }
    let game = b.build()?;
    let contexts = (0..ns).map(|i| layout.driver_context(i)).collect();
    let model = GippsModel::new(&format!("gipps-{}", layout.cells), contexts, noise)?;
    Ok(Environment {
        name,
        game,
        model: Arc::new(model),
        defaults: EnvironmentDefaults {
            planner: PlannerConfig {
                horizon: 60,
                per_state_count: 8,
                depth: 30,
                rollouts: 2000,
                ..PlannerConfig::default()
            },
            num_particles: 100,
            opponents: 10,
            episodes: 5,
            steps: 100,
        },
    })
}
