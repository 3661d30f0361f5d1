//! Annealing schedules s(t) with s(0) = 0 and s(T) = 1.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An interpolation path from the driver (s = 0) to the problem (s = 1).
///
/// `value_at` is not range-checked; callers that accept user times should go
/// through a checked accessor such as [`FourierSchedule::evaluate`].
pub trait AnnealingSchedule {
    fn total_time(&self) -> f64;
    fn value_at(&self, t: f64) -> f64;
}

/// `s(t) = t/T + Σ_k x_k sin(πkt/T)`. Values outside `[0, 1]` in the interior
/// are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierSchedule {
    #[serde(rename = "T")]
    total_time: f64,
    coefficients: Vec<f64>,
}

impl FourierSchedule {
    pub fn new(total_time: f64, coefficients: Vec<f64>) -> Result<Self> {
        if !(total_time.is_finite() && total_time > 0.0) {
            return Err(Error::Domain(format!("annealing time must be positive, got {total_time}")));
        }
        if coefficients.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("schedule coefficients must be finite".into()));
        }
        Ok(FourierSchedule {
            total_time,
            coefficients,
        })
    }

    pub fn linear(total_time: f64) -> Result<Self> {
        FourierSchedule::new(total_time, Vec::new())
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn num_frequencies(&self) -> usize {
        self.coefficients.len()
    }

    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.total_time).contains(&t) {
            return Err(Error::Domain(format!(
                "time {t} outside [0, {}]",
                self.total_time
            )));
        }
        Ok(self.value_at(t))
    }
}

impl AnnealingSchedule for FourierSchedule {
    fn total_time(&self) -> f64 {
        self.total_time
    }

    fn value_at(&self, t: f64) -> f64 {
        let phase = t / self.total_time;
        // sin(πk) is not exactly zero in floating point
        if phase == 0.0 {
            return 0.0;
        }
        if phase == 1.0 {
            return 1.0;
        }
        let sines: f64 = self
            .coefficients
            .iter()
            .enumerate()
            .map(|(k, x)| x * (PI * (k + 1) as f64 * phase).sin())
            .sum();
        phase + sines
    }
}

/// Uniformly spaced coefficient values including both endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionGrid {
    values: Vec<f64>,
}

pub const DEFAULT_GRID_SIZE: usize = 40;
pub const DEFAULT_GRID_LO: f64 = -0.2;
pub const DEFAULT_GRID_HI: f64 = 0.2;

impl Default for ActionGrid {
    fn default() -> Self {
        ActionGrid::new(DEFAULT_GRID_SIZE, DEFAULT_GRID_LO, DEFAULT_GRID_HI)
            .expect("default grid is valid")
    }
}

impl ActionGrid {
    pub fn new(num_values: usize, lo: f64, hi: f64) -> Result<Self> {
        if num_values < 2 {
            return Err(Error::Domain(format!("action grid needs >= 2 values, got {num_values}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Domain(format!("invalid grid bounds [{lo}, {hi}]")));
        }
        let step = (hi - lo) / (num_values - 1) as f64;
        let mut values: Vec<f64> = (0..num_values).map(|i| lo + i as f64 * step).collect();
        values[num_values - 1] = hi;
        Ok(ActionGrid { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_values(&self) -> usize {
        self.values.len()
    }

    pub fn lo(&self) -> f64 {
        self.values[0]
    }

    pub fn hi(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn value(&self, index: usize) -> Result<f64> {
        self.values.get(index).copied().ok_or_else(|| {
            Error::Domain(format!(
                "action index {index} out of range 0..{}",
                self.values.len()
            ))
        })
    }

    pub fn coefficients(&self, indices: &[usize]) -> Result<Vec<f64>> {
        indices.iter().map(|&i| self.value(i)).collect()
    }
}

/// Builds the schedule whose k-th coefficient is the grid value chosen by the
/// k-th move.
pub fn from_actions(indices: &[usize], grid: &ActionGrid, total_time: f64) -> Result<FourierSchedule> {
    FourierSchedule::new(total_time, grid.coefficients(indices)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_schedule() {
        let s = FourierSchedule::linear(4.0).unwrap();
        for t in [0.0, 1.0, 2.5, 4.0] {
            assert_eq!(s.evaluate(t).unwrap(), t / 4.0);
        }
    }

    #[test]
    fn single_frequency_midpoint() {
        let s = FourierSchedule::new(1.0, vec![0.2]).unwrap();
        assert!((s.evaluate(0.5).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range_times() {
        let s = FourierSchedule::new(2.0, vec![0.1]).unwrap();
        assert!(s.evaluate(-1e-9).is_err());
        assert!(s.evaluate(2.0 + 1e-9).is_err());
        assert!(FourierSchedule::new(0.0, vec![]).is_err());
        assert!(FourierSchedule::new(1.0, vec![f64::NAN]).is_err());
    }

    #[test]
    fn default_grid_layout() {
        let g = ActionGrid::default();
        assert_eq!(g.num_values(), 40);
        assert_eq!(g.lo(), -0.2);
        assert_eq!(g.hi(), 0.2);
        let step = 0.4 / 39.0;
        assert!((g.values()[1] - g.values()[0] - step).abs() < 1e-15);
        assert!((g.values()[19] - (-0.2 + 19.0 * step)).abs() < 1e-15);
        assert!(g.values().windows(2).all(|w| w[0] < w[1]));
        assert!(!g.values().contains(&0.0));
    }

    #[test]
    fn actions_map_to_grid_values() {
        let g = ActionGrid::default();
        let s = from_actions(&[0, 0, 0], &g, 3.0).unwrap();
        assert_eq!(s.coefficients(), &[-0.2, -0.2, -0.2]);
        let s = from_actions(&[39], &g, 3.0).unwrap();
        assert_eq!(s.coefficients(), &[0.2]);
        assert!(from_actions(&[40], &g, 3.0).is_err());
    }

    #[test]
    fn distinct_actions_give_distinct_coefficients() {
        let g = ActionGrid::default();
        let mut seen = std::collections::HashSet::new();
        for a in 0..40 {
            for b in 0..40 {
                let c = g.coefficients(&[a, b]).unwrap();
                assert!(seen.insert((c[0].to_bits(), c[1].to_bits())));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn endpoints_are_exact(
            t_total in 0.01f64..200.0,
            coeffs in prop::collection::vec(-5.0f64..5.0, 0..10),
        ) {
            let s = FourierSchedule::new(t_total, coeffs).unwrap();
            prop_assert_eq!(s.evaluate(0.0).unwrap(), 0.0);
            prop_assert_eq!(s.evaluate(t_total).unwrap(), 1.0);
        }

        #[test]
        fn odd_harmonic_is_symmetric_about_midpoint(
            x in -1.0f64..1.0,
            t_total in 0.1f64..50.0,
            frac in 0.0f64..1.0,
        ) {
            let s = FourierSchedule::new(t_total, vec![x]).unwrap();
            let t = frac * t_total;
            let left = s.evaluate(t).unwrap() - t / t_total;
            let right = s.evaluate(t_total - t).unwrap() - (t_total - t) / t_total;
            prop_assert!((left - right).abs() < 1e-12);
        }
    }
}
