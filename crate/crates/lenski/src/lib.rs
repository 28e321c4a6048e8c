//! Individual-based simulation laboratory for serial-dilution evolution
//! experiments of the Lenski type.
//!
//! The model: each day starts with `N` cells; every cell splits at its own
//! rate (a Yule process) until the day ends at a stopping time tied to the
//! capacity `gamma * N`; the next day is founded by a uniform sample of `N`
//! cells. Beneficial mutations raise a cell's rate. On top of this engine
//! the crate provides the machinery to measure the quantities this design
//! is known for: fixation probabilities of beneficial mutations, coalescent
//! statistics of the neutral genealogy, near-critical Galton-Watson
//! approximations of early sweeps, and the long-run relative-fitness power
//! laws, each paired with its closed-form or asymptotic target.
//!
//! Start with the runnable programs in `examples/`, one per capability, or
//! with the `lenski` binary which drives the same experiments from a config
//! file and writes plot-ready CSV plus JSON summaries.

pub mod cannings;
pub mod curves;
pub mod error;
pub mod evolution;
pub mod genealogy;
pub mod gw;
pub mod runner;
mod sampling;
pub mod stats;
pub mod sweep;
pub mod yule;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic per-replicate generator: one master seed, one ChaCha
/// stream per replicate index. Streams are cryptographically separated, so
/// replicates never share randomness regardless of how they are scheduled.
pub fn replicate_rng(master_seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate);
    rng
}
