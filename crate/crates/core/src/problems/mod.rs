//! Problem instances and their diagonal (classical) Hamiltonians.
//!
//! Bit convention used throughout the crate: variable `i` (1-based) or vertex
//! `i - 1` (0-based) is stored in bit `i - 1` of a computational-basis index,
//! least-significant first. A set bit means boolean `true`, which is the
//! σᶻ eigenvalue −1.

mod cnf;
mod graph;
mod hamiltonian;

pub use cnf::{count_satisfying, generate_hard_sat, Clause, CnfInstance, HardSatOptions, Literal};
pub use graph::{sample_cubic_graph, CubicGraphOptions, CutGraph};
pub use hamiltonian::{
    ground_truth, maxcut_hamiltonian, sat_hamiltonian, DiagonalHamiltonian, DEFAULT_MAX_QUBITS,
};

/// Boolean value of variable `var` (1-based) in basis index `z`.
#[inline]
pub fn bit_value(z: usize, var: usize) -> bool {
    (z >> (var - 1)) & 1 == 1
}
