//! State-vector simulation of H(t) = (1 − s(t))·H₀ + s(t)·H_f with the
//! transverse-field driver H₀ = ±Σⱼ σˣⱼ.
//!
//! Each time step of length h uses Strang splitting with the schedule sampled
//! at the step midpoint s*:
//!
//! ```text
//! U ≈ exp(−i h (1−s*) H₀ / 2) · exp(−i h s* H_f) · exp(−i h (1−s*) H₀ / 2)
//! ```
//!
//! Both factors are applied exactly: H_f is a diagonal phase and the driver
//! factor is the same single-qubit σˣ rotation on every qubit. Adjacent driver
//! half-steps commute and are fused into one rotation.

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::DiagonalHamiltonian;
use crate::schedule::{AnnealingSchedule, FourierSchedule};

pub const DEFAULT_DT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if !dim.is_power_of_two() {
            return Err(Error::Domain(format!("state dimension {dim} is not a power of two")));
        }
        Ok(StateVector {
            num_qubits: dim.trailing_zeros() as usize,
            amplitudes,
        })
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        *amplitudes
            .get_mut(index)
            .ok_or_else(|| Error::Domain(format!("basis index {index} out of range")))? =
            Complex64::new(1.0, 0.0);
        Ok(StateVector {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.amplitudes.len(),
                got: other.amplitudes.len(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }
}

/// Sign of the driver Hamiltonian H₀ = sign · Σⱼ σˣⱼ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriverSign {
    /// H₀ = +Σσˣ, ground state |−⟩^⊗n.
    #[default]
    Positive,
    /// H₀ = −Σσˣ, ground state |+⟩^⊗n.
    Negative,
}

impl DriverSign {
    fn factor(self) -> f64 {
        match self {
            DriverSign::Positive => 1.0,
            DriverSign::Negative => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    #[serde(default)]
    pub driver: DriverSign,
    #[serde(default)]
    pub integrator: Integrator,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            dt: DEFAULT_DT,
            driver: DriverSign::Positive,
            integrator: Integrator::Strang,
        }
    }
}

impl EvolutionConfig {
    pub fn with_dt(dt: f64) -> Self {
        EvolutionConfig {
            dt,
            ..Default::default()
        }
    }
}

/// Ground state of the driver: uniform magnitudes, with sign (−1)^popcount(z)
/// for the positive driver.
pub fn initial_state(num_qubits: usize, driver: DriverSign, max_qubits: usize) -> Result<StateVector> {
    if num_qubits == 0 || num_qubits > max_qubits {
        return Err(Error::Size {
            requested: num_qubits,
            max: max_qubits,
        });
    }
    let dim = 1usize << num_qubits;
    let mag = (dim as f64).sqrt().recip();
    let amplitudes = (0..dim)
        .map(|z| match driver {
            DriverSign::Negative => Complex64::new(mag, 0.0),
            DriverSign::Positive if z.count_ones() % 2 == 1 => Complex64::new(-mag, 0.0),
            DriverSign::Positive => Complex64::new(mag, 0.0),
        })
        .collect();
    Ok(StateVector {
        num_qubits,
        amplitudes,
    })
}

/// Step boundaries covering `[0, total]` exactly: whole steps of `dt`, plus a
/// final partial step for any remainder.
fn step_lengths(total: f64, dt: f64) -> impl Iterator<Item = (f64, f64)> {
    let ratio = total / dt;
    let rounded = ratio.round();
    let (full, rem) = if (rounded - ratio).abs() <= 1e-9 * ratio.max(1.0) {
        (rounded as usize, 0.0)
    } else {
        let full = ratio.floor() as usize;
        (full, total - full as f64 * dt)
    };
    let full_steps = (0..full).map(move |k| {
        let start = k as f64 * dt;
        let end = if k + 1 == full && rem == 0.0 { total } else { start + dt };
        (start, end - start)
    });
    let tail = (rem > 0.0).then(|| (full as f64 * dt, rem));
    full_steps.chain(tail)
}

/// exp(−i θ σ Σⱼ σˣⱼ) applied in place.
fn apply_driver(amps: &mut [Complex64], num_qubits: usize, theta: f64, sign: f64) {
    if theta == 0.0 {
        return;
    }
    let (sin, cos) = theta.sin_cos();
    let sin = sign * sin;
    for q in 0..num_qubits {
        let stride = 1usize << q;
        for block in amps.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                // c·x − i·s·y
                *a = Complex64::new(cos * x.re + sin * y.im, cos * x.im - sin * y.re);
                *b = Complex64::new(cos * y.re + sin * x.im, cos * y.im - sin * x.re);
            }
        }
    }
}

struct PhaseKernel<'a> {
    h: &'a DiagonalHamiltonian,
    buffer: Vec<Complex64>,
}

impl<'a> PhaseKernel<'a> {
    fn new(h: &'a DiagonalHamiltonian) -> Self {
        let len = h.levels().map_or(0, |(levels, _)| levels.len());
        PhaseKernel {
            h,
            buffer: vec![Complex64::new(1.0, 0.0); len],
        }
    }

    /// exp(−i τ H_f) applied in place.
    fn apply(&mut self, amps: &mut [Complex64], tau: f64) {
        match self.h.levels() {
            Some((levels, index)) => {
                for (p, &e) in self.buffer.iter_mut().zip(levels) {
                    *p = Complex64::from_polar(1.0, -tau * e);
                }
                for (a, &i) in amps.iter_mut().zip(index) {
                    *a *= self.buffer[i as usize];
                }
            }
            None => {
                for (a, &e) in amps.iter_mut().zip(self.h.diag()) {
                    *a *= Complex64::from_polar(1.0, -tau * e);
                }
            }
        }
    }
}

fn validate(h_f: &DiagonalHamiltonian, state: &StateVector, cfg: &EvolutionConfig) -> Result<()> {
    if state.amplitudes.len() != h_f.dim() {
        return Err(Error::DimensionMismatch {
            expected: h_f.dim(),
            got: state.amplitudes.len(),
        });
    }
    if !(cfg.dt.is_finite() && cfg.dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {}", cfg.dt)));
    }
    Ok(())
}

/// Evolves `state` from t = 0 to t = T under the schedule, in place.
pub fn evolve_state<S: AnnealingSchedule + ?Sized>(
    state: &mut StateVector,
    h_f: &DiagonalHamiltonian,
    schedule: &S,
    cfg: &EvolutionConfig,
) -> Result<()> {
    validate(h_f, state, cfg)?;
    let total = schedule.total_time();
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Domain(format!("annealing time must be positive, got {total}")));
    }
    let n = state.num_qubits;
    let sign = cfg.driver.factor();
    let mut phases = PhaseKernel::new(h_f);
    let amps = &mut state.amplitudes;

    let mut pending = 0.0;
    for (start, len) in step_lengths(total, cfg.dt.min(total)) {
        let s_mid = schedule.value_at(start + 0.5 * len);
        let half = 0.5 * len * (1.0 - s_mid);
        apply_driver(amps, n, pending + half, sign);
        phases.apply(amps, len * s_mid);
        pending = half;
    }
    apply_driver(amps, n, pending, sign);
    Ok(())
}

/// Final state of the annealing run starting from the driver ground state.
pub fn evolve<S: AnnealingSchedule + ?Sized>(
    h_f: &DiagonalHamiltonian,
    schedule: &S,
    cfg: &EvolutionConfig,
) -> Result<StateVector> {
    let mut state = initial_state(h_f.num_qubits(), cfg.driver, usize::BITS as usize - 1)?;
    evolve_state(&mut state, h_f, schedule, cfg)?;
    Ok(state)
}

/// Total probability on the target basis states.
pub fn fidelity(state: &StateVector, target: &[usize]) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::Domain("fidelity target set is empty".into()));
    }
    target.iter().try_fold(0.0, |acc, &z| {
        state
            .amplitudes
            .get(z)
            .map(|a| acc + a.norm_sqr())
            .ok_or_else(|| Error::Domain(format!("target index {z} out of range")))
    })
}

/// ⟨ψ|H|ψ⟩ for a diagonal H.
pub fn energy(state: &StateVector, h: &DiagonalHamiltonian) -> Result<f64> {
    if state.amplitudes.len() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: state.amplitudes.len(),
        });
    }
    Ok(state
        .amplitudes
        .iter()
        .zip(h.diag())
        .map(|(a, e)| a.norm_sqr() * e)
        .sum())
}

/// Number of completed schedule evaluations. Shareable across threads.
#[derive(Debug, Default)]
pub struct EvalCounter(AtomicU64);

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    fn increment(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    /// Folds a private counter into this one.
    pub fn merge(&self, other: &EvalCounter) {
        self.0.fetch_add(other.get(), Ordering::Relaxed);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub fidelity: f64,
    pub energy: f64,
}

/// One full annealing run. The only way optimizers query the annealer; the
/// counter advances by exactly one per call that reaches the simulation.
pub fn evaluate_schedule<S: AnnealingSchedule + ?Sized>(
    h_f: &DiagonalHamiltonian,
    target: &[usize],
    schedule: &S,
    cfg: &EvolutionConfig,
    counter: &EvalCounter,
) -> Result<Observables> {
    let state = evolve(h_f, schedule, cfg)?;
    counter.increment();
    Ok(Observables {
        fidelity: fidelity(&state, target)?,
        energy: energy(&state, h_f)?,
    })
}

/// Black-box view of the annealer used by the optimizers: coefficients in,
/// observables out.
pub trait ScheduleObjective {
    fn evaluate(&self, coefficients: &[f64]) -> Result<Observables>;

    /// Total evaluations performed so far.
    fn evaluations(&self) -> u64;
}

/// Annealer bound to one problem Hamiltonian, target set and annealing time.
#[derive(Debug)]
pub struct AnnealingEvaluator<'a> {
    h_f: &'a DiagonalHamiltonian,
    target: Vec<usize>,
    total_time: f64,
    cfg: EvolutionConfig,
    counter: EvalCounter,
}

impl<'a> AnnealingEvaluator<'a> {
    /// Targets the ground manifold of `h_f`.
    pub fn new(h_f: &'a DiagonalHamiltonian, total_time: f64, cfg: EvolutionConfig) -> Result<Self> {
        Self::with_target(h_f, h_f.ground_indices().to_vec(), total_time, cfg)
    }

    pub fn with_target(
        h_f: &'a DiagonalHamiltonian,
        target: Vec<usize>,
        total_time: f64,
        cfg: EvolutionConfig,
    ) -> Result<Self> {
        if target.is_empty() || target.iter().any(|&z| z >= h_f.dim()) {
            return Err(Error::Domain("invalid fidelity target set".into()));
        }
        FourierSchedule::linear(total_time)?;
        if !(cfg.dt.is_finite() && cfg.dt > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {}", cfg.dt)));
        }
        Ok(AnnealingEvaluator {
            h_f,
            target,
            total_time,
            cfg,
            counter: EvalCounter::new(),
        })
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn hamiltonian(&self) -> &DiagonalHamiltonian {
        self.h_f
    }

    pub fn counter(&self) -> &EvalCounter {
        &self.counter
    }

    pub fn final_state(&self, coefficients: &[f64]) -> Result<StateVector> {
        let s = FourierSchedule::new(self.total_time, coefficients.to_vec())?;
        evolve(self.h_f, &s, &self.cfg)
    }

    /// Counted evaluation that also hands back the final state.
    pub fn evaluate_with_state(&self, coefficients: &[f64]) -> Result<(Observables, StateVector)> {
        let s = FourierSchedule::new(self.total_time, coefficients.to_vec())?;
        let state = evolve(self.h_f, &s, &self.cfg)?;
        self.counter.increment();
        let obs = Observables {
            fidelity: fidelity(&state, &self.target)?,
            energy: energy(&state, self.h_f)?,
        };
        Ok((obs, state))
    }
}

impl ScheduleObjective for AnnealingEvaluator<'_> {
    fn evaluate(&self, coefficients: &[f64]) -> Result<Observables> {
        let s = FourierSchedule::new(self.total_time, coefficients.to_vec())?;
        evaluate_schedule(self.h_f, &self.target, &s, &self.cfg, &self.counter)
    }

    fn evaluations(&self) -> u64 {
        self.counter.get()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::DEFAULT_MAX_QUBITS;

    fn driver_energy(state: &StateVector, sign: f64) -> f64 {
        // ⟨ψ| sign·Σ σˣ |ψ⟩
        let n = state.num_qubits();
        let amps = state.amplitudes();
        let mut total = 0.0;
        for q in 0..n {
            for (z, a) in amps.iter().enumerate() {
                total += (a.conj() * amps[z ^ (1 << q)]).re;
            }
        }
        sign * total
    }

    #[test]
    fn single_qubit_initial_state() {
        let s = initial_state(1, DriverSign::Positive, DEFAULT_MAX_QUBITS).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0] - Complex64::new(r, 0.0)).norm() < 1e-15);
        assert!((s.amplitudes()[1] - Complex64::new(-r, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn initial_state_is_driver_ground_state() {
        for driver in [DriverSign::Positive, DriverSign::Negative] {
            let s = initial_state(3, driver, DEFAULT_MAX_QUBITS).unwrap();
            assert!((driver_energy(&s, driver.factor()) + 3.0).abs() < 1e-12);
            assert!(s
                .amplitudes()
                .iter()
                .all(|a| (a.norm() - 8f64.sqrt().recip()).abs() < 1e-15));
        }
        assert!(initial_state(0, DriverSign::Positive, 20).is_err());
        assert!(initial_state(21, DriverSign::Positive, 20).is_err());
    }

    #[test]
    fn step_lengths_cover_total_time() {
        for (total, dt) in [(2.0, 0.05), (1.0, 0.3), (1e-6, 1e-6), (10.0, 0.05), (0.7, 0.1)] {
            let steps: Vec<_> = step_lengths(total, dt).collect();
            let (last_start, last_len) = *steps.last().unwrap();
            assert_eq!(last_start + last_len, total, "{total} {dt}");
            assert!(steps.iter().all(|&(_, h)| h > 0.0 && h <= dt * (1.0 + 1e-12)));
        }
        assert_eq!(step_lengths(1.0, 0.3).count(), 4);
    }

    #[test]
    fn short_evolution_barely_moves() {
        let h = DiagonalHamiltonian::from_diag(2, vec![0.0, 1.0, 3.0, 2.0]).unwrap();
        let s = FourierSchedule::linear(1e-6).unwrap();
        let psi = evolve(&h, &s, &EvolutionConfig::with_dt(1e-6)).unwrap();
        let psi0 = initial_state(2, DriverSign::Positive, 20).unwrap();
        assert!(psi0.inner(&psi).unwrap().norm_sqr() >= 1.0 - 1e-6);
    }

    #[test]
    fn observables_on_simple_states() {
        let h = DiagonalHamiltonian::from_diag(2, vec![0.0, 1.0, 1.0, 2.0]).unwrap();
        let z = StateVector::basis(2, 3).unwrap();
        assert_eq!(fidelity(&z, &[3]).unwrap(), 1.0);
        assert_eq!(energy(&z, &h).unwrap(), 2.0);
        let psi0 = initial_state(2, DriverSign::Positive, 20).unwrap();
        assert!((fidelity(&psi0, &[0]).unwrap() - 0.25).abs() < 1e-15);
        assert!((fidelity(&psi0, &[0, 1, 2, 3]).unwrap() - 1.0).abs() < 1e-15);
        assert!(fidelity(&psi0, &[]).is_err());
        assert!(fidelity(&psi0, &[4]).is_err());
        assert!(energy(&StateVector::basis(1, 0).unwrap(), &h).is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        let h = DiagonalHamiltonian::from_diag(2, vec![0.0, 1.0, 1.0, 2.0]).unwrap();
        let s = FourierSchedule::linear(1.0).unwrap();
        assert!(evolve(&h, &s, &EvolutionConfig::with_dt(0.0)).is_err());
        assert!(evolve(&h, &s, &EvolutionConfig::with_dt(-0.1)).is_err());
        let mut wrong = initial_state(3, DriverSign::Positive, 20).unwrap();
        assert!(matches!(
            evolve_state(&mut wrong, &h, &s, &EvolutionConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn counter_counts_each_evaluation() {
        let h = DiagonalHamiltonian::from_diag(2, vec![0.0, 1.0, 1.0, 2.0]).unwrap();
        let ev = AnnealingEvaluator::new(&h, 2.0, EvolutionConfig::default()).unwrap();
        assert_eq!(ev.evaluations(), 0);
        ev.evaluate(&[0.1]).unwrap();
        assert_eq!(ev.evaluations(), 1);
        assert!(ev.evaluate(&[f64::NAN]).is_err());
        assert_eq!(ev.evaluations(), 1);
        let other = EvalCounter::new();
        other.merge(ev.counter());
        assert_eq!(other.get(), 1);
    }

    #[test]
    fn negative_driver_matches_relabeled_positive_driver() {
        // Z-flip on every qubit maps +Σσˣ to −Σσˣ and leaves H_f unchanged.
        let h = DiagonalHamiltonian::from_diag(3, vec![3.0, 1.0, 0.0, 2.0, 2.0, 1.0, 0.5, 4.0]).unwrap();
        let s = FourierSchedule::new(3.0, vec![0.1, -0.05]).unwrap();
        let pos = evolve(&h, &s, &EvolutionConfig::default()).unwrap();
        let neg_cfg = EvolutionConfig {
            driver: DriverSign::Negative,
            ..Default::default()
        };
        let neg = evolve(&h, &s, &neg_cfg).unwrap();
        for (z, (a, b)) in pos.amplitudes().iter().zip(neg.amplitudes()).enumerate() {
            let sign = if z.count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            assert!((a - b * sign).norm() < 1e-12);
        }
    }
}
