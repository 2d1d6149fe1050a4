//! Deterministic fish-school simulation.
//!
//! Fish random-walk inside a square pond, their objective being distance to
//! the pond center. Each step has two phases:
//!
//! 1. **move**: every fish takes a random step whose size shrinks with weight;
//! 2. **eat**: the largest objective improvement across the school is found
//!    with a parallel max, then every weight is nudged by its own improvement
//!    normalized by that maximum.
//!
//! The randomness for fish `i` at step `t` comes from a counter-based stream
//! keyed by `(seed, i, t)`, so the final state depends only on the
//! [`SimConfig`] and never on thread count, schedule or construct.

mod config;

use std::time::Instant;

pub use config::{SimConfig, SimConfigBuilder, SimConfigError, W_MIN};

use crate::rng::Stream;
use crate::runtime::{Executor, ExecutorError, RunConfig};

/// Step id used for the initialization draws.
const INIT_STEP: u64 = u64::MAX;

const AXIS_X: u64 = 0;
const AXIS_Y: u64 = 1;
const WEIGHT_DRAW: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fish {
    pub x: f64,
    pub y: f64,
    pub weight: f64,
    pub prev_objective: f64,
    pub current_objective: f64,
}

/// The fish population, indexed by fish id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct School {
    fishes: Vec<Fish>,
}

impl School {
    pub fn from_fishes(fishes: Vec<Fish>) -> Self {
        School { fishes }
    }

    pub fn fishes(&self) -> &[Fish] {
        &self.fishes
    }

    pub fn len(&self) -> usize {
        self.fishes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fishes.is_empty()
    }

    pub fn checksum(&self) -> u64 {
        checksum(self)
    }
}

/// Euclidean distance from `(x, y)` to the center of a square pond.
///
/// ```
/// assert_eq!(fsb::sim::objective(103.0, 104.0, 200.0), 5.0);
/// ```
#[inline]
pub fn objective(x: f64, y: f64, pond_size: f64) -> f64 {
    let half = pond_size / 2.0;
    ((x - half).powi(2) + (y - half).powi(2)).sqrt()
}

/// Positions uniform over the pond, weights uniform in `[W_MIN, W0]`, and
/// both objectives set to the starting distance from the center.
pub fn init_school(cfg: &SimConfig) -> School {
    let size = cfg.pond_size();
    let fishes = (0..cfg.num_fish())
        .map(|i| {
            let rng = Stream::new(cfg.seed(), i as u64, INIT_STEP);
            let x = rng.uniform_at(AXIS_X, 0.0, size);
            let y = rng.uniform_at(AXIS_Y, 0.0, size);
            let weight = rng.uniform_at(WEIGHT_DRAW, W_MIN, cfg.weight_scale());
            let objective = objective(x, y, size);
            Fish {
                x,
                y,
                weight,
                prev_objective: objective,
                current_objective: objective,
            }
        })
        .collect();
    School { fishes }
}

/// Move every fish by an independent uniform step in
/// `[-s, s]²`, `s = step_base / max(1, weight)`, clamped to the pond walls.
/// Returns the elapsed seconds of the parallel loop.
pub fn move_phase(school: &mut School, cfg: &SimConfig, step_index: u64, exec: &Executor) -> f64 {
    let size = cfg.pond_size();
    let step_base = cfg.step_base();
    let seed = cfg.seed();
    exec.for_each_mut(&mut school.fishes, |i, fish| {
        let rng = Stream::new(seed, i as u64, step_index);
        let reach = step_base / fish.weight.max(1.0);
        let dx = rng.uniform_at(AXIS_X, -reach, reach);
        let dy = rng.uniform_at(AXIS_Y, -reach, reach);
        move_fish(fish, dx, dy, size);
    })
}

#[inline]
fn move_fish(fish: &mut Fish, dx: f64, dy: f64, pond_size: f64) {
    fish.x = (fish.x + dx).clamp(0.0, pond_size);
    fish.y = (fish.y + dy).clamp(0.0, pond_size);
    fish.prev_objective = fish.current_objective;
    fish.current_objective = objective(fish.x, fish.y, pond_size);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EatOutcome {
    /// Largest `prev_objective - current_objective`, or `-∞` for an empty school.
    pub max_diff: f64,
    /// Seconds spent in the max loop only.
    pub elapsed: f64,
}

/// Find the largest improvement with the executor's construct, then update
/// weights sequentially: `w += diff / max_diff`, clamped to `[W_MIN, 2·W0]`.
/// Weights are left alone when no fish improved.
pub fn eat_phase(school: &mut School, cfg: &SimConfig, exec: &Executor) -> EatOutcome {
    let fishes = &school.fishes;
    let (max_diff, elapsed) = exec.parallel_max(fishes.len(), |i| {
        fishes[i].prev_objective - fishes[i].current_objective
    });
    if max_diff > 0.0 {
        let w_max = cfg.w_max();
        for fish in &mut school.fishes {
            let diff = fish.prev_objective - fish.current_objective;
            fish.weight = (fish.weight + diff / max_diff).clamp(W_MIN, w_max);
        }
    }
    EatOutcome { max_diff, elapsed }
}

/// Wall-clock breakdown of one simulation, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Timing {
    /// Initialization plus every step.
    pub total: f64,
    pub init: f64,
    /// Sum of move-phase loop times.
    pub moves: f64,
    /// Sum of eat-phase max-loop times.
    pub eat: f64,
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub school: School,
    /// `max_diff` of every step's eat phase.
    pub trace: Vec<f64>,
    pub timing: Timing,
}

impl Simulation {
    pub fn checksum(&self) -> u64 {
        checksum(&self.school)
    }
}

/// Initialize, then run `num_steps` move/eat steps on `exec`.
pub fn simulate_with(cfg: &SimConfig, exec: &Executor) -> Simulation {
    let start = Instant::now();
    let mut school = init_school(cfg);
    let mut timing = Timing {
        init: start.elapsed().as_secs_f64(),
        ..Timing::default()
    };
    let mut trace = Vec::with_capacity(cfg.num_steps());
    for step in 0..cfg.num_steps() {
        timing.moves += move_phase(&mut school, cfg, step as u64, exec);
        let eat = eat_phase(&mut school, cfg, exec);
        timing.eat += eat.elapsed;
        trace.push(eat.max_diff);
    }
    timing.total = start.elapsed().as_secs_f64();
    Simulation {
        school,
        trace,
        timing,
    }
}

/// [`simulate_with`] on a fresh executor for `run`. Pool start-up is not
/// included in the reported timing.
pub fn simulate(cfg: &SimConfig, run: &RunConfig) -> Result<Simulation, ExecutorError> {
    let exec = Executor::new(run)?;
    Ok(simulate_with(cfg, &exec))
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a (64-bit) over the little-endian bit patterns of every fish's
/// `x, y, weight, prev_objective, current_objective`, in index order.
/// An empty school hashes to the FNV offset basis `0xcbf29ce484222325`.
pub fn checksum(school: &School) -> u64 {
    let mut hash = FNV_OFFSET;
    for fish in &school.fishes {
        for value in [
            fish.x,
            fish.y,
            fish.weight,
            fish.prev_objective,
            fish.current_objective,
        ] {
            for byte in value.to_bits().to_le_bytes() {
                hash ^= u64::from(byte);
                hash = hash.wrapping_mul(FNV_PRIME);
            }
        }
    }
    hash
}
