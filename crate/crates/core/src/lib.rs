//! Quantum-annealing schedule optimization for 3-SAT and Max-Cut.
//!
//! The annealing path `s(t)` interpolates between the transverse-field driver
//! and a diagonal problem Hamiltonian. It is parameterized by a linear ramp plus
//! `M` sine harmonics and tuned by one of three strategies: the plain linear
//! ramp, multi-start BFGS over continuous coefficients, or Monte Carlo tree
//! search over a discretized coefficient grid. Fidelity with the known ground
//! manifold and the number of annealer evaluations are the reported metrics.

pub mod dynamics;
pub mod error;
pub mod harness;
pub mod optimizers;
pub mod problems;
pub mod schedule;

pub use error::{Error, Result};
