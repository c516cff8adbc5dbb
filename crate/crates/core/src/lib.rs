//! Task-automaton reward shaping for reinforcement learning.
//!
//! This crate compiles co-safe LTL task specifications into distance-annotated
//! DFAs, derives progression/hybrid/adaptive reward functions over an
//! on-the-fly product of environment and automaton, and provides both a
//! tabular learning harness and exact oracles (value iteration, policy
//! evaluation, best-possible task progression) for enumerable products.
//!
//! The crate is `no_std` + `alloc`; all IO, file formats, and the CLI live in
//! the companion `shaper-cli` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod dfa;
pub mod env;
pub mod formula;
pub mod letter;
pub mod metrics;
pub mod oracle;
pub mod parse;
pub mod reward;
pub mod rl;

pub use dfa::{Dfa, DfaAnalysis, StateId};
pub use formula::Formula;
pub use letter::{Alphabet, Letter};
pub use metrics::{DistanceTable, Partition};
pub use reward::{RewardContext, RewardKind};
