//! Elasticity decisions for horizontally scaled clusters.
//!
//! At every decision step a small Markov decision process over cluster sizes
//! is instantiated from logged behaviour at the current load, solved for the
//! action with the highest expected utility, and optionally queried for
//! reachability probabilities. The crate also contains the baselines and the
//! emulation harness used to compare decision policies.

pub mod emulator;
pub mod error;
pub mod harness;
pub mod model;
pub mod policy;
pub mod query;
pub mod reward;
pub mod solver;

pub use error::{Error, Result};
