//! Labeled environments: grid worlds and the taxi domain.
//!
//! An environment exposes sampled episodes through [`LabeledEnv`] and, when
//! small enough, an exact model through [`LabeledEnv::model`] with action
//! noise expanded analytically. The model is what the oracles consume; the
//! sampled interface is what the learner consumes. Both are driven by the
//! same transition code, so a sampled step always lands on an outcome the
//! model assigns positive probability.

use alloc::vec::Vec;

use crate::letter::{Alphabet, Letter};

mod grid;
mod subgoal;
mod taxi;

pub use grid::{
    example_grid, example_grid_constraints, office_world, shortest_path, verify_map, Cell,
    ConstraintOutcome, ExampleGridVariant, Expectation, FlagGrid, GridMap, MapError,
    OfficeVariant, PathConstraint, EXAMPLE_FORMULA, EXAMPLE_GRID_HORIZON, OFFICE_FORMULA,
};
pub use subgoal::SubgoalRewarder;
pub use taxi::{taxi_world, TaxiVariant, TaxiWorld, TAXI_FORMULA};

/// Opaque encoding of an environment state, unique within one environment.
pub type EnvStateId = u64;

/// Result of one sampled environment step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub state: EnvStateId,
    pub label: Letter,
    /// The environment itself ended the episode (independent of the task).
    pub env_done: bool,
}

/// An MDP with a labeling function over an alphabet of atomic propositions.
///
/// Labels are attached to transitions rather than states: entering a flag
/// cell emits that flag's proposition for exactly that step, which a purely
/// state-based labeling cannot express once consumable flags disappear.
pub trait LabeledEnv {
    fn alphabet(&self) -> &Alphabet;
    fn num_actions(&self) -> usize;
    /// Episode step budget enforced by the session layer.
    fn horizon(&self) -> usize;
    /// Starts a new episode; returns the initial state and its entry label.
    fn reset(&mut self, seed: u64) -> (EnvStateId, Letter);
    /// Advances one step. Must be called only after `reset`.
    fn step(&mut self, action: usize) -> StepOutcome;
    /// Exact enumeration of the reachable state space, when tractable.
    fn model(&self) -> Option<EnvModel> {
        None
    }
}

/// Exact finite model of an environment: every reachable state, the initial
/// distribution, and per-action outcome distributions with transition labels.
#[derive(Debug, Clone)]
pub struct EnvModel {
    pub num_actions: usize,
    pub horizon: usize,
    /// Opaque ids, indexable by position; `transitions` uses positions.
    pub states: Vec<EnvStateId>,
    /// `(state index, entry label, probability)`, probabilities summing to 1.
    pub initial: Vec<(usize, Letter, f64)>,
    /// `transitions[s][a]` is the outcome distribution for action `a`.
    pub transitions: Vec<Vec<Vec<(usize, Letter, f64)>>>,
}

impl EnvModel {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn index_of(&self, id: EnvStateId) -> Option<usize> {
        self.states.iter().position(|&s| s == id)
    }
}

/// Derives an independent stream seed from a master seed (splitmix64).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform draw in `[0, 1)` with 53-bit resolution.
pub(crate) fn uniform_f64(rng: &mut impl rand_core::RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Direction sampled under slip noise: the intended direction with
/// probability `1 - noise`, each perpendicular with `noise / 2`.
pub(crate) fn slip_direction(
    intended: usize,
    noise: f64,
    rng: &mut impl rand_core::RngCore,
) -> usize {
    if noise <= 0.0 {
        return intended;
    }
    let u = uniform_f64(rng);
    let (perp_a, perp_b) = perpendicular(intended);
    if u < noise / 2.0 {
        perp_a
    } else if u < noise {
        perp_b
    } else {
        intended
    }
}

/// The two directions perpendicular to a movement direction, in a fixed
/// order so analytic noise expansion is reproducible.
pub(crate) fn perpendicular(dir: usize) -> (usize, usize) {
    match dir {
        0 | 1 => (2, 3), // up/down slip left/right
        _ => (0, 1),
    }
}

/// Outcome distribution over movement directions under slip noise.
pub(crate) fn direction_distribution(intended: usize, noise: f64) -> Vec<(usize, f64)> {
    if noise <= 0.0 {
        return alloc::vec![(intended, 1.0)];
    }
    let (perp_a, perp_b) = perpendicular(intended);
    alloc::vec![
        (intended, 1.0 - noise),
        (perp_a, noise / 2.0),
        (perp_b, noise / 2.0),
    ]
}
