//! Schedule optimizers. All of them query the annealer only through
//! [`ScheduleObjective`], so `n_fev` is the counter delta over the run.

mod bfgs;
mod mcts;

use serde::{Deserialize, Serialize};

use crate::dynamics::{Observables, ScheduleObjective};
use crate::error::{Error, Result};

pub use bfgs::{
    bfgs_optimize, bfgs_optimize_detailed, central_gradient, multistart_bfgs, BfgsOptions, BfgsStats,
    MultistartOptions,
};
pub use mcts::{mcts_optimize, ConvergenceRule, MctsNode, MctsOptions, MctsSearch, SearchTree, StepOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ConvergedFidelity,
    /// No relative progress over the stall window, or a line search that
    /// could not decrease the objective.
    ConvergedStall,
    BudgetExhausted,
    GradientConverged,
    /// The linear baseline: one evaluation, nothing to converge.
    SingleEvaluation,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ConvergedFidelity => "converged_fidelity",
            Termination::ConvergedStall => "converged_stall",
            Termination::BudgetExhausted => "budget_exhausted",
            Termination::GradientConverged => "gradient_converged",
            Termination::SingleEvaluation => "single_evaluation",
        }
    }
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub n_fev: u64,
    pub best_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub best_coefficients: Vec<f64>,
    pub best_fidelity: f64,
    pub best_energy: f64,
    pub n_fev: u64,
    pub trace: Vec<TracePoint>,
    pub termination: Termination,
}

/// Why an optimizer loop stopped early.
#[derive(Debug)]
pub(crate) enum Halt {
    Budget,
    Failed(Error),
}

impl From<Error> for Halt {
    fn from(e: Error) -> Self {
        Halt::Failed(e)
    }
}

/// Budgeted, best-seen recording wrapper around an objective.
pub(crate) struct Tracker<'a> {
    objective: &'a dyn ScheduleObjective,
    start: u64,
    budget: u64,
    best: Option<(Vec<f64>, Observables)>,
    trace: Vec<TracePoint>,
}

impl<'a> Tracker<'a> {
    pub(crate) fn new(objective: &'a dyn ScheduleObjective, budget: u64) -> Self {
        Tracker {
            objective,
            start: objective.evaluations(),
            budget,
            best: None,
            trace: Vec::new(),
        }
    }

    pub(crate) fn used(&self) -> u64 {
        self.objective.evaluations() - self.start
    }

    pub(crate) fn remaining(&self) -> u64 {
        self.budget.saturating_sub(self.used())
    }

    pub(crate) fn observe(&mut self, x: &[f64]) -> std::result::Result<Observables, Halt> {
        if self.used() >= self.budget {
            return Err(Halt::Budget);
        }
        let obs = self.objective.evaluate(x)?;
        if !(obs.fidelity.is_finite() && obs.energy.is_finite()) {
            return Err(Halt::Failed(Error::NonFinite {
                value: if obs.fidelity.is_finite() { obs.energy } else { obs.fidelity },
                coefficients: x.to_vec(),
            }));
        }
        if self.best.as_ref().map_or(true, |(_, b)| obs.fidelity > b.fidelity) {
            self.best = Some((x.to_vec(), obs));
        }
        Ok(obs)
    }

    pub(crate) fn best_fidelity(&self) -> f64 {
        self.best.as_ref().map_or(f64::NEG_INFINITY, |(_, o)| o.fidelity)
    }

    pub(crate) fn record(&mut self) {
        if self.best.is_some() {
            let point = TracePoint {
                n_fev: self.used(),
                best_fidelity: self.best_fidelity(),
            };
            self.trace.push(point);
        }
    }

    pub(crate) fn finish(mut self, termination: Termination) -> Result<OptimizationResult> {
        if self.trace.last().map_or(true, |p| p.n_fev != self.used()) {
            self.record();
        }
        let n_fev = self.used();
        let (coefficients, obs) = self
            .best
            .ok_or_else(|| Error::Domain("optimizer finished without any evaluation".into()))?;
        Ok(OptimizationResult {
            best_coefficients: coefficients,
            best_fidelity: obs.fidelity,
            best_energy: obs.energy,
            n_fev,
            trace: self.trace,
            termination,
        })
    }
}

/// Evaluates the pure linear ramp (no harmonics) once.
pub fn linear_baseline(objective: &dyn ScheduleObjective) -> Result<OptimizationResult> {
    let mut tracker = Tracker::new(objective, 1);
    match tracker.observe(&[]) {
        Ok(_) => {}
        Err(Halt::Failed(e)) => return Err(e),
        Err(Halt::Budget) => unreachable!("fresh tracker has budget 1"),
    }
    tracker.finish(Termination::SingleEvaluation)
}

#[cfg(test)]
pub(crate) mod testing {
    use std::cell::Cell;

    use super::*;

    /// Injected objective: fidelity = 1 − f(x), counted like the annealer.
    pub(crate) struct FnObjective<F> {
        f: F,
        count: Cell<u64>,
    }

    impl<F: Fn(&[f64]) -> f64> FnObjective<F> {
        pub(crate) fn new(f: F) -> Self {
            FnObjective { f, count: Cell::new(0) }
        }
    }

    impl<F: Fn(&[f64]) -> f64> ScheduleObjective for FnObjective<F> {
        fn evaluate(&self, x: &[f64]) -> Result<Observables> {
            self.count.set(self.count.get() + 1);
            let value = (self.f)(x);
            Ok(Observables {
                fidelity: 1.0 - value,
                energy: value,
            })
        }

        fn evaluations(&self) -> u64 {
            self.count.get()
        }
    }
}
