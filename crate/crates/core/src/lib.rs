//! Distillation of trained networks into explicit decision trees and juntas.
//!
//! The crate is organized bottom-up:
//!
//! - [`boolcore`]: inputs, clauses, decision trees, samplers.
//! - [`nnmodel`]: a residual MLP source model and its representation map.
//! - [`probe`]: norm-constrained linear probes on a representation.
//! - [`treedistill`]: clause search with probe pruning plus dynamic-programming
//!   tree stitching.
//! - [`juntadistill`]: query-only junta extraction and junta-to-tree conversion.
//! - [`statlab`]: finite function classes, VC dimension, Pareto frontiers and
//!   Monte-Carlo checks of sample-complexity bounds.
//! - [`experiment`]: configs and drivers shared by the CLI and the test suites.

pub mod boolcore;
pub mod error;
pub mod experiment;
pub mod juntadistill;
pub mod nnmodel;
pub mod probe;
pub mod statlab;
pub mod treedistill;

pub use error::{Error, Result};

/// Seeded generator used throughout; streams are reproducible across runs.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Convenience constructor for [`Rng`].
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
