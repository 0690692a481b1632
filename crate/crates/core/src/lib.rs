//! Random circuit sampling toolkit: circuit generation, exact and noisy
//! state-vector simulation, cross-entropy benchmarking statistics and the
//! Ising path-sum picture of circuit amplitudes.

pub mod analysis;
pub mod circuit;
pub mod ising;
pub mod noise;
mod numeric;
pub mod rng;
pub mod statevector;

pub use numeric::{det_sum, KahanSum};
