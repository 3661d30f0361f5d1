use super::{Clause, CnfInstance, CutGraph};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_QUBITS: usize = 20;

/// Largest number of distinct energies for which the level table is kept.
const MAX_LEVELS: usize = 1024;

/// A Hamiltonian diagonal in the computational basis, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalHamiltonian {
    num_qubits: usize,
    diag: Vec<f64>,
    ground_energy: f64,
    ground_indices: Vec<usize>,
    // distinct energies and the level of each basis index, when few enough
    levels: Option<(Vec<f64>, Vec<u16>)>,
}

impl DiagonalHamiltonian {
    pub fn from_diag(num_qubits: usize, diag: Vec<f64>) -> Result<Self> {
        let dim = 1usize
            .checked_shl(num_qubits as u32)
            .ok_or(Error::Size {
                requested: num_qubits,
                max: usize::BITS as usize - 1,
            })?;
        if diag.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: diag.len(),
            });
        }
        if let Some(bad) = diag.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite diagonal entry {bad}")));
        }
        let (ground_energy, ground_indices) = ground_truth(&diag);
        let levels = level_table(&diag);
        Ok(DiagonalHamiltonian {
            num_qubits,
            diag,
            ground_energy,
            ground_indices,
            levels,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn ground_energy(&self) -> f64 {
        self.ground_energy
    }

    pub fn ground_indices(&self) -> &[usize] {
        &self.ground_indices
    }

    pub fn max_energy(&self) -> f64 {
        self.diag.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest energy strictly above the ground energy, if any.
    pub fn first_excited_energy(&self) -> Option<f64> {
        self.diag
            .iter()
            .copied()
            .filter(|&e| e > self.ground_energy)
            .min_by(f64::total_cmp)
    }

    pub(crate) fn levels(&self) -> Option<(&[f64], &[u16])> {
        self.levels.as_ref().map(|(l, i)| (l.as_slice(), i.as_slice()))
    }
}

fn level_table(diag: &[f64]) -> Option<(Vec<f64>, Vec<u16>)> {
    let mut distinct: Vec<f64> = diag.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() > MAX_LEVELS {
        return None;
    }
    let index = diag
        .iter()
        .map(|v| distinct.binary_search_by(|p| p.total_cmp(v)).unwrap() as u16)
        .collect();
    Some((distinct, index))
}

/// Exact minimum of `diag` and the full set of indices attaining it.
pub fn ground_truth(diag: &[f64]) -> (f64, Vec<usize>) {
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let indices = diag
        .iter()
        .enumerate()
        .filter(|&(_, &e)| e == min)
        .map(|(z, _)| z)
        .collect();
    (min, indices)
}

fn check_size(n: usize, max_qubits: usize) -> Result<()> {
    if n > max_qubits {
        return Err(Error::Size {
            requested: n,
            max: max_qubits,
        });
    }
    Ok(())
}

/// Violated-clause counting Hamiltonian: each clause adds 1 on the single
/// assignment of its three variables that falsifies it.
pub fn sat_hamiltonian(inst: &CnfInstance, max_qubits: usize) -> Result<DiagonalHamiltonian> {
    let n = inst.num_vars();
    check_size(n, max_qubits)?;
    let mut diag = vec![0.0; 1 << n];
    for (mask, pattern) in inst.clauses().iter().map(Clause::violation_pattern) {
        for (z, e) in diag.iter_mut().enumerate() {
            if z & mask == pattern {
                *e += 1.0;
            }
        }
    }
    DiagonalHamiltonian::from_diag(n, diag)
}

/// Antiferromagnetic Ising Hamiltonian Σ_{(i,j)∈E} (1 + σᶻᵢσᶻⱼ): an uncut edge
/// costs 2, a cut edge costs 0.
pub fn maxcut_hamiltonian(g: &CutGraph, max_qubits: usize) -> Result<DiagonalHamiltonian> {
    let n = g.num_vertices();
    check_size(n, max_qubits)?;
    let mut diag = vec![0.0; 1 << n];
    for &(a, b) in g.edges() {
        for (z, e) in diag.iter_mut().enumerate() {
            let sa = 1 - 2 * ((z >> a) & 1) as i32;
            let sb = 1 - 2 * ((z >> b) & 1) as i32;
            *e += f64::from(1 + sa * sb);
        }
    }
    DiagonalHamiltonian::from_diag(n, diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Literal;

    #[test]
    fn positive_clause_penalizes_all_false() {
        let inst = CnfInstance::new(
            3,
            vec![Clause([Literal::positive(1), Literal::positive(2), Literal::positive(3)])],
        )
        .unwrap();
        let h = sat_hamiltonian(&inst, DEFAULT_MAX_QUBITS).unwrap();
        assert_eq!(h.diag(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(h.ground_energy(), 0.0);
        assert_eq!(h.ground_indices().len(), 7);
    }

    #[test]
    fn diag_sum_counts_each_clause_eighth() {
        let inst = crate::problems::generate_hard_sat(7, 5, Default::default()).unwrap();
        let h = sat_hamiltonian(&inst, DEFAULT_MAX_QUBITS).unwrap();
        let total: f64 = h.diag().iter().sum();
        assert_eq!(total, (inst.num_clauses() << (7 - 3)) as f64);
    }

    #[test]
    fn triangle_maxcut() {
        let g = CutGraph::complete(3).unwrap();
        let h = maxcut_hamiltonian(&g, DEFAULT_MAX_QUBITS).unwrap();
        // {0} | {1, 2}
        assert_eq!(h.diag()[0b001], 2.0);
        assert_eq!(h.ground_energy(), 2.0);
        assert_eq!(h.ground_indices(), &[1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn k4_ground_energy_is_four() {
        let h = maxcut_hamiltonian(&CutGraph::complete(4).unwrap(), DEFAULT_MAX_QUBITS).unwrap();
        assert_eq!(h.diag()[0b0011], 4.0);
        assert_eq!(h.ground_energy(), 4.0);
        assert_eq!(h.ground_indices(), &[0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]);
    }

    #[test]
    fn size_limit_is_enforced() {
        let g = CutGraph::complete(5).unwrap();
        assert!(matches!(
            maxcut_hamiltonian(&g, 4),
            Err(Error::Size { requested: 5, max: 4 })
        ));
    }

    #[test]
    fn ground_truth_cases() {
        assert_eq!(ground_truth(&[0.0, 1.0, 1.0, 2.0]), (0.0, vec![0]));
        assert_eq!(ground_truth(&[3.0; 8]), (3.0, (0..8).collect()));
    }

    #[test]
    fn spectrum_helpers() {
        let h = DiagonalHamiltonian::from_diag(2, vec![2.0, 0.0, 5.0, 0.0]).unwrap();
        assert_eq!(h.first_excited_energy(), Some(2.0));
        assert_eq!(h.max_energy(), 5.0);
        let (levels, index) = h.levels().unwrap();
        assert_eq!(levels, &[0.0, 2.0, 5.0]);
        assert_eq!(index, &[1, 0, 2, 0]);
        assert!(DiagonalHamiltonian::from_diag(2, vec![0.0; 3]).is_err());
    }
}
