//! Test-only reference implementations, independent of the library's
//! simulation path.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use qaschedule::dynamics::{DriverSign, StateVector};
use qaschedule::problems::{CnfInstance, CutGraph, DiagonalHamiltonian};
use qaschedule::schedule::AnnealingSchedule;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Dense H(s) = (1 − s)·sign·Σσˣ + s·H_f built entry by entry.
pub fn dense_hamiltonian(diag: &[f64], s: f64, sign: f64) -> DMatrix<Complex64> {
    let dim = diag.len();
    let n = dim.trailing_zeros() as usize;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for z in 0..dim {
        h[(z, z)] = c(s * diag[z]);
        for q in 0..n {
            h[(z ^ (1 << q), z)] += c((1.0 - s) * sign);
        }
    }
    h
}

/// Driver ground state built from its defining product form.
pub fn dense_initial_state(n: usize, driver: DriverSign) -> Vec<Complex64> {
    let single = match driver {
        DriverSign::Positive => [c(1.0), c(-1.0)],
        DriverSign::Negative => [c(1.0), c(1.0)],
    };
    let mut psi = vec![c(1.0)];
    for _ in 0..n {
        let mut next = vec![c(0.0); psi.len() * 2];
        for (z, a) in psi.iter().enumerate() {
            // new qubit becomes the most significant bit
            next[z] += a * single[0] / 2f64.sqrt();
            next[z + psi.len()] += a * single[1] / 2f64.sqrt();
        }
        psi = next;
    }
    psi
}

/// Fourth-order Magnus propagator with dense matrix exponentials, `substeps`
/// uniform steps over [0, T].
pub fn dense_reference<S: AnnealingSchedule>(
    h_f: &DiagonalHamiltonian,
    schedule: &S,
    driver: DriverSign,
    substeps: usize,
) -> Vec<Complex64> {
    let sign = match driver {
        DriverSign::Positive => 1.0,
        DriverSign::Negative => -1.0,
    };
    let total = schedule.total_time();
    let h = total / substeps as f64;
    let gauss = 3f64.sqrt() / 6.0;
    let minus_i = Complex64::new(0.0, -1.0);
    let mut psi = nalgebra::DVector::from_vec(dense_initial_state(h_f.num_qubits(), driver));
    for k in 0..substeps {
        let t0 = k as f64 * h;
        let a1 = dense_hamiltonian(h_f.diag(), schedule.value_at(t0 + h * (0.5 - gauss)), sign) * minus_i;
        let a2 = dense_hamiltonian(h_f.diag(), schedule.value_at(t0 + h * (0.5 + gauss)), sign) * minus_i;
        let comm = &a2 * &a1 - &a1 * &a2;
        let omega = (&a1 + &a2) * c(h / 2.0) + comm * c(3f64.sqrt() / 12.0 * h * h);
        psi = omega.exp() * psi;
    }
    psi.iter().copied().collect()
}

pub fn overlap(a: &[Complex64], b: &StateVector) -> f64 {
    a.iter()
        .zip(b.amplitudes())
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        .norm_sqr()
}

pub fn dense_fidelity(psi: &[Complex64], target: &[usize]) -> f64 {
    target.iter().map(|&z| psi[z].norm_sqr()).sum()
}

/// Violated clauses counted by evaluating each literal from the boolean
/// assignment vector.
pub fn brute_violations(inst: &CnfInstance, z: usize) -> usize {
    let assignment: Vec<bool> = (0..inst.num_vars()).map(|i| (z >> i) & 1 == 1).collect();
    inst.clauses()
        .iter()
        .filter(|cl| {
            !cl.literals()
                .iter()
                .any(|lit| assignment[lit.var - 1] != lit.negated)
        })
        .count()
}

pub fn brute_cut(g: &CutGraph, z: usize) -> usize {
    let side: Vec<u8> = (0..g.num_vertices()).map(|v| ((z >> v) & 1) as u8).collect();
    g.edges().iter().filter(|&&(a, b)| side[a] != side[b]).count()
}

pub fn random_diag(rng: &mut impl Rng, n: usize) -> DiagonalHamiltonian {
    let diag = (0..1usize << n).map(|_| rng.gen_range(0.0..4.0)).collect();
    DiagonalHamiltonian::from_diag(n, diag).unwrap()
}

/// Triangles counted over all vertex triples.
pub fn triangle_count(g: &CutGraph) -> usize {
    let n = g.num_vertices();
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in g.edges() {
        adj[a][b] = true;
        adj[b][a] = true;
    }
    let mut count = 0;
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                if adj[a][b] && adj[b][c] && adj[a][c] {
                    count += 1;
                }
            }
        }
    }
    count
}
