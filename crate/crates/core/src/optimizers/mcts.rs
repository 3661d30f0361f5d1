//! Monte Carlo tree search over discretized schedule coefficients.
//!
//! The search treats choosing `M` coefficients as an `M`-move game: the move
//! at depth `k` picks the value of `x_{k+1}` from the action grid. Each
//! iteration selects by UCT, expands one new child, completes the schedule with
//! uniformly random moves, and backs the resulting fidelity up the path.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Halt, OptimizationResult, Termination, Tracker};
use crate::dynamics::ScheduleObjective;
use crate::error::{Error, Result};
use crate::schedule::ActionGrid;

/// When to stop before the iteration budget runs out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceRule {
    /// Stop once the best fidelity reaches this value.
    pub target_fidelity: Option<f64>,
    /// Stall window in iterations.
    pub stall_window: Option<usize>,
    /// Minimum relative improvement of the best fidelity over the window.
    pub stall_rel_tol: f64,
}

impl Default for ConvergenceRule {
    fn default() -> Self {
        ConvergenceRule {
            target_fidelity: Some(0.99),
            stall_window: Some(20),
            stall_rel_tol: 0.01,
        }
    }
}

impl ConvergenceRule {
    pub fn disabled() -> Self {
        ConvergenceRule {
            target_fidelity: None,
            stall_window: None,
            stall_rel_tol: 0.0,
        }
    }

    /// `history[i]` is the best fidelity after iteration `i + 1`.
    fn check(&self, history: &[f64]) -> Option<Termination> {
        let best = *history.last()?;
        if self.target_fidelity.is_some_and(|target| best >= target) {
            return Some(Termination::ConvergedFidelity);
        }
        let window = self.stall_window?;
        if window == 0 || history.len() <= window {
            return None;
        }
        let before = history[history.len() - 1 - window];
        let rel = (best - before) / before.max(1e-12);
        (rel < self.stall_rel_tol).then_some(Termination::ConvergedStall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MctsOptions {
    pub grid_size: usize,
    pub grid_lo: f64,
    pub grid_hi: f64,
    /// Maximum iterations, one annealer evaluation each.
    pub budget: u64,
    pub exploration: f64,
    pub convergence: ConvergenceRule,
}

impl Default for MctsOptions {
    fn default() -> Self {
        MctsOptions {
            grid_size: crate::schedule::DEFAULT_GRID_SIZE,
            grid_lo: crate::schedule::DEFAULT_GRID_LO,
            grid_hi: crate::schedule::DEFAULT_GRID_HI,
            budget: 5_000,
            exploration: std::f64::consts::SQRT_2,
            convergence: ConvergenceRule::default(),
        }
    }
}

impl MctsOptions {
    pub fn grid(&self) -> Result<ActionGrid> {
        ActionGrid::new(self.grid_size, self.grid_lo, self.grid_hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MctsNode {
    /// Number of moves made to reach this node; depth `M` is a complete schedule.
    pub depth: usize,
    pub action: Option<usize>,
    pub parent: Option<usize>,
    pub visit_count: u64,
    pub value_sum: f64,
    pub best_value: f64,
    /// Rewards obtained from simulations started at this node.
    pub rollouts: u64,
    /// Grid index → node id.
    pub children: BTreeMap<usize, usize>,
}

impl MctsNode {
    fn new(depth: usize, action: Option<usize>, parent: Option<usize>) -> Self {
        MctsNode {
            depth,
            action,
            parent,
            visit_count: 0,
            value_sum: 0.0,
            best_value: f64::NEG_INFINITY,
            rollouts: 0,
            children: BTreeMap::new(),
        }
    }

    pub fn mean_value(&self) -> f64 {
        self.value_sum / self.visit_count as f64
    }
}

/// Arena-allocated search tree; node 0 is the root.
#[derive(Debug, Clone)]
pub struct SearchTree {
    nodes: Vec<MctsNode>,
    num_actions: usize,
    max_depth: usize,
}

impl SearchTree {
    fn new(num_actions: usize, max_depth: usize) -> Self {
        SearchTree {
            nodes: vec![MctsNode::new(0, None, None)],
            num_actions,
            max_depth,
        }
    }

    pub fn root(&self) -> &MctsNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[MctsNode] {
        &self.nodes
    }

    /// Checks visit bookkeeping on every node.
    pub fn check_consistency(&self) -> std::result::Result<(), String> {
        for (id, node) in self.nodes.iter().enumerate() {
            let child_visits: u64 = node.children.values().map(|&c| self.nodes[c].visit_count).sum();
            if node.visit_count != child_visits + node.rollouts {
                return Err(format!(
                    "node {id}: {} visits != {child_visits} child visits + {} rollouts",
                    node.visit_count, node.rollouts
                ));
            }
            if node.depth < self.max_depth && node.rollouts > 1 {
                return Err(format!("inner node {id} rolled out {} times", node.rollouts));
            }
            if node.depth > self.max_depth || node.children.len() > self.num_actions {
                return Err(format!("node {id} malformed"));
            }
            for (&a, &c) in &node.children {
                let child = &self.nodes[c];
                if child.parent != Some(id) || child.action != Some(a) || child.depth != node.depth + 1 {
                    return Err(format!("node {c} is not a proper child of {id}"));
                }
                if child.best_value > node.best_value {
                    return Err(format!("node {id} best value below child {c}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub reward: f64,
    pub best_fidelity: f64,
    pub converged: Option<Termination>,
}

/// Incremental MCTS driver; [`mcts_optimize`] runs it to completion.
pub struct MctsSearch<'a> {
    tracker: Tracker<'a>,
    tree: SearchTree,
    grid: ActionGrid,
    opts: MctsOptions,
    rng: ChaCha8Rng,
    history: Vec<f64>,
    best_actions: Vec<usize>,
}

impl<'a> MctsSearch<'a> {
    pub fn new(
        objective: &'a dyn ScheduleObjective,
        num_frequencies: usize,
        opts: &MctsOptions,
        seed: u64,
    ) -> Result<Self> {
        if num_frequencies == 0 {
            return Err(Error::Domain("MCTS needs at least one coefficient".into()));
        }
        if opts.budget == 0 {
            return Err(Error::Domain("MCTS budget must be at least 1".into()));
        }
        let grid = opts.grid()?;
        Ok(MctsSearch {
            tracker: Tracker::new(objective, opts.budget),
            tree: SearchTree::new(grid.num_values(), num_frequencies),
            grid,
            opts: opts.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            history: Vec::new(),
            best_actions: Vec::new(),
        })
    }

    pub fn tree(&self) -> &SearchTree {
        &self.tree
    }

    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn best_actions(&self) -> &[usize] {
        &self.best_actions
    }

    pub fn exhausted(&self) -> bool {
        self.tracker.remaining() == 0
    }

    fn uct_child(&mut self, node: usize) -> usize {
        let parent = &self.tree.nodes[node];
        let log_n = (parent.visit_count as f64).ln();
        let mut best = f64::NEG_INFINITY;
        let mut ties: Vec<usize> = Vec::new();
        for &c in parent.children.values() {
            let child = &self.tree.nodes[c];
            let score = child.mean_value()
                + self.opts.exploration * (log_n / child.visit_count as f64).sqrt();
            if score > best {
                best = score;
                ties.clear();
                ties.push(c);
            } else if score == best {
                ties.push(c);
            }
        }
        *ties.choose(&mut self.rng).expect("fully expanded node has children")
    }

    /// One select–expand–rollout–backpropagate cycle.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let depth = self.tree.max_depth;
        let num_actions = self.tree.num_actions;
        let mut path = vec![0usize];
        let mut actions = Vec::with_capacity(depth);
        let mut node = 0;

        loop {
            let current = &self.tree.nodes[node];
            if current.depth == depth {
                break;
            }
            if current.children.len() < num_actions {
                let untried: Vec<usize> = (0..num_actions).filter(|a| !current.children.contains_key(a)).collect();
                let action = *untried.choose(&mut self.rng).expect("untried action exists");
                let id = self.tree.nodes.len();
                self.tree.nodes.push(MctsNode::new(current.depth + 1, Some(action), Some(node)));
                self.tree.nodes[node].children.insert(action, id);
                path.push(id);
                actions.push(action);
                node = id;
                break;
            }
            node = self.uct_child(node);
            path.push(node);
            actions.push(self.tree.nodes[node].action.expect("non-root node has an action"));
        }

        while actions.len() < depth {
            actions.push(self.rng.gen_range(0..num_actions));
        }
        let coefficients = self.grid.coefficients(&actions)?;
        let before = self.tracker.best_fidelity();
        let reward = match self.tracker.observe(&coefficients) {
            Ok(obs) => obs.fidelity,
            Err(Halt::Failed(e)) => return Err(e),
            Err(Halt::Budget) => return Err(Error::Domain("MCTS budget exhausted".into())),
        };
        if self.tracker.best_fidelity() > before {
            self.best_actions = actions;
        }

        self.tree.nodes[node].rollouts += 1;
        for &id in &path {
            let n = &mut self.tree.nodes[id];
            n.visit_count += 1;
            n.value_sum += reward;
            n.best_value = n.best_value.max(reward);
        }

        let best = self.tracker.best_fidelity();
        self.history.push(best);
        self.tracker.record();
        Ok(StepOutcome {
            reward,
            best_fidelity: best,
            converged: self.opts.convergence.check(&self.history),
        })
    }

    pub fn finish(self, termination: Termination) -> Result<OptimizationResult> {
        self.tracker.finish(termination)
    }
}

/// Runs MCTS until the convergence rule fires or the budget is spent, and
/// returns the best complete schedule evaluated.
pub fn mcts_optimize(
    objective: &dyn ScheduleObjective,
    num_frequencies: usize,
    opts: &MctsOptions,
    seed: u64,
) -> Result<OptimizationResult> {
    let mut search = MctsSearch::new(objective, num_frequencies, opts, seed)?;
    loop {
        let outcome = search.step()?;
        if let Some(t) = outcome.converged {
            return search.finish(t);
        }
        if search.exhausted() {
            return search.finish(Termination::BudgetExhausted);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::FnObjective;
    use super::*;

    fn distance_to_top(x: &[f64]) -> f64 {
        (x[0] - 0.2).abs()
    }

    #[test]
    fn finds_upper_endpoint_for_monotone_reward() {
        let obj = FnObjective::new(distance_to_top);
        let opts = MctsOptions {
            budget: 40,
            convergence: ConvergenceRule::disabled(),
            ..Default::default()
        };
        let r = mcts_optimize(&obj, 1, &opts, 3).unwrap();
        assert_eq!(r.best_coefficients, vec![0.2]);
        assert_eq!(r.n_fev, 40);
        assert_eq!(r.termination, Termination::BudgetExhausted);
    }

    #[test]
    fn tree_stays_consistent() {
        let obj = FnObjective::new(|x: &[f64]| x.iter().map(|v| (v - 0.05).powi(2)).sum::<f64>());
        let opts = MctsOptions {
            grid_size: 5,
            budget: 300,
            convergence: ConvergenceRule::disabled(),
            ..Default::default()
        };
        let mut search = MctsSearch::new(&obj, 3, &opts, 1).unwrap();
        let mut rewards = 0.0;
        let mut last_best = f64::NEG_INFINITY;
        while !search.exhausted() {
            let out = search.step().unwrap();
            rewards += out.reward;
            assert!(out.best_fidelity >= last_best);
            last_best = out.best_fidelity;
            search.tree().check_consistency().unwrap();
            let root = search.tree().root();
            assert_eq!(root.visit_count, obj.evaluations());
            assert!((root.value_sum - rewards).abs() < 1e-9);
        }
        // grid {-0.2, -0.1, 0, 0.1, 0.2}: the optimum 0.05 is equidistant
        // from 0 and 0.1, so the best reward is 1 − 3·0.05²
        let r = search.finish(Termination::BudgetExhausted).unwrap();
        assert!((r.best_fidelity - (1.0 - 3.0 * 0.0025)).abs() < 1e-12);
    }

    #[test]
    fn stall_rule_stops_constant_reward() {
        let obj = FnObjective::new(|_: &[f64]| 0.5);
        let r = mcts_optimize(&obj, 2, &MctsOptions::default(), 0).unwrap();
        assert_eq!(r.termination, Termination::ConvergedStall);
        assert_eq!(r.n_fev, 21);
    }

    #[test]
    fn target_fidelity_stops_immediately() {
        let obj = FnObjective::new(|_: &[f64]| 0.001);
        let r = mcts_optimize(&obj, 2, &MctsOptions::default(), 0).unwrap();
        assert_eq!(r.termination, Termination::ConvergedFidelity);
        assert_eq!(r.n_fev, 1);
    }

    #[test]
    fn convergence_rule_arithmetic() {
        let rule = ConvergenceRule::default();
        let mut h = vec![0.5; 20];
        assert_eq!(rule.check(&h), None);
        h.push(0.5 * 1.0101);
        assert_eq!(rule.check(&h), None);
        h.push(0.5 * 1.0101);
        // window now starts at the second entry, still 0.5
        assert_eq!(rule.check(&h), None);
        let flat = vec![0.3; 21];
        assert_eq!(rule.check(&flat), Some(Termination::ConvergedStall));
        assert_eq!(ConvergenceRule::disabled().check(&flat), None);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let obj = FnObjective::new(distance_to_top);
        let zero_budget = MctsOptions {
            budget: 0,
            ..Default::default()
        };
        assert!(mcts_optimize(&obj, 1, &zero_budget, 0).is_err());
        assert!(mcts_optimize(&obj, 0, &MctsOptions::default(), 0).is_err());
    }

    #[test]
    fn same_seed_same_result() {
        let f = |x: &[f64]| x.iter().map(|v| (v + 0.07).powi(2)).sum::<f64>();
        let opts = MctsOptions {
            budget: 200,
            ..Default::default()
        };
        let a = mcts_optimize(&FnObjective::new(f), 3, &opts, 17).unwrap();
        let b = mcts_optimize(&FnObjective::new(f), 3, &opts, 17).unwrap();
        assert_eq!(a, b);
    }
}
