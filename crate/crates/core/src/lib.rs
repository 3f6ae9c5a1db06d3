//! Solution diversity for Ising spin glasses.
//!
//! The crate is organised bottom-up:
//!
//! * [`instance`] – problem Hamiltonian, generators, energy and the text file format.
//! * [`spectrum`] – exhaustive and branch-and-bound enumeration of the low-energy manifold.
//! * [`diversity`] – refined (singly-connected) Hamming distance, basin seeds, the diversity measure.
//! * [`schedule`] – space-time transverse-field profiles with multiple critical fronts.
//! * [`solver`] – path-integral Monte Carlo annealer and a classical Gibbs sampler.
//! * [`metrics`] – time-to-solution and time-to-diversity estimators.
//! * [`bench`] – experiment orchestration and report files.

pub mod bench;
pub mod diversity;
pub mod error;
pub mod instance;
pub mod metrics;
pub mod rng;
pub mod schedule;
pub mod solver;
pub mod spectrum;

pub use error::{Error, Result};
pub use instance::{Instance, SpinConfig};
