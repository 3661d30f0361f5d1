//! BFGS over continuous, unbounded schedule coefficients, minimizing
//! `1 − fidelity` with central finite-difference gradients.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Halt, OptimizationResult, Termination, TracePoint, Tracker};
use crate::dynamics::ScheduleObjective;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BfgsOptions {
    /// Stop when the infinity norm of the gradient falls below this.
    pub gtol: f64,
    /// Absolute central-difference step per coefficient.
    pub fd_step: f64,
    /// Evaluation budget for one local optimization.
    pub max_evaluations: u64,
    pub max_iterations: usize,
    pub c1: f64,
    pub c2: f64,
    /// Trial points per line search.
    pub max_line_search: usize,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            gtol: 1e-6,
            fd_step: 1e-3,
            max_evaluations: 10_000,
            max_iterations: 1_000,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 20,
        }
    }
}

/// Internal bookkeeping of one BFGS run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BfgsStats {
    pub iterations: usize,
    /// Objective values requested (initial point and line-search trials).
    pub value_calls: u64,
    /// Finite-difference gradients requested; each costs `2M` evaluations.
    pub gradient_calls: u64,
    pub line_search_trials: u64,
}

struct Problem<'t, 'a> {
    tracker: &'t mut Tracker<'a>,
    fd_step: f64,
    stats: BfgsStats,
}

impl Problem<'_, '_> {
    fn value(&mut self, x: &[f64]) -> std::result::Result<f64, Halt> {
        self.stats.value_calls += 1;
        Ok(1.0 - self.tracker.observe(x)?.fidelity)
    }

    fn gradient(&mut self, x: &[f64]) -> std::result::Result<Vec<f64>, Halt> {
        self.stats.gradient_calls += 1;
        let tracker = &mut *self.tracker;
        central_gradient(|p| Ok(1.0 - tracker.observe(p)?.fidelity), x, self.fd_step)
    }
}

/// Central-difference gradient of `f` with absolute step `h`: `2·len(x)`
/// calls, in the order +h, −h per coordinate.
pub fn central_gradient<E>(
    mut f: impl FnMut(&[f64]) -> std::result::Result<f64, E>,
    x: &[f64],
    h: f64,
) -> std::result::Result<Vec<f64>, E> {
    let mut probe = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let plus = f(&probe)?;
        probe[i] = x[i] - h;
        let minus = f(&probe)?;
        probe[i] = x[i];
        g.push((plus - minus) / (2.0 * h));
    }
    Ok(g)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn axpy(x: &[f64], alpha: f64, p: &[f64]) -> Vec<f64> {
    x.iter().zip(p).map(|(xi, pi)| xi + alpha * pi).collect()
}

/// Minimizer of the cubic through two points with values and slopes,
/// clamped to `[lo, hi]`; bisection if the cubic has no real minimizer.
fn cubic_minimizer(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64, lo: f64, hi: f64) -> f64 {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    if disc >= 0.0 && a != b {
        let d2 = disc.sqrt().copysign(b - a);
        let t = b - (b - a) * ((db + d2 - d1) / (db - da + 2.0 * d2));
        if t.is_finite() {
            return t.clamp(lo, hi);
        }
    }
    0.5 * (lo + hi)
}

struct Trial {
    alpha: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

/// Line search for a step satisfying the strong Wolfe conditions, with cubic
/// interpolation in the zoom phase. Returns `None` when no decrease is found.
fn strong_wolfe(
    prob: &mut Problem<'_, '_>,
    opts: &BfgsOptions,
    x: &[f64],
    f0: f64,
    slope0: f64,
    p: &[f64],
    alpha_init: f64,
) -> std::result::Result<Option<Trial>, Halt> {
    let probe = |prob: &mut Problem<'_, '_>, alpha: f64| -> std::result::Result<Trial, Halt> {
        prob.stats.line_search_trials += 1;
        let xn = axpy(x, alpha, p);
        let f = prob.value(&xn)?;
        let g = prob.gradient(&xn)?;
        let slope = dot(&g, p);
        Ok(Trial { alpha, x: xn, f, g, slope })
    };
    let armijo = |t: &Trial| t.f <= f0 + opts.c1 * t.alpha * slope0;
    let curvature = |t: &Trial| t.slope.abs() <= -opts.c2 * slope0;

    let mut prev = Trial {
        alpha: 0.0,
        x: x.to_vec(),
        f: f0,
        g: Vec::new(),
        slope: slope0,
    };
    let mut alpha = alpha_init;
    let mut trials = 0;
    let (mut lo, mut hi) = loop {
        if trials >= opts.max_line_search {
            return Ok(None);
        }
        trials += 1;
        let cur = probe(prob, alpha)?;
        if !armijo(&cur) || (trials > 1 && cur.f >= prev.f) {
            break (prev, cur);
        }
        if curvature(&cur) {
            return Ok(Some(cur));
        }
        if cur.slope >= 0.0 {
            break (cur, prev);
        }
        alpha = 2.0 * cur.alpha;
        prev = cur;
    };

    // zoom: `lo` satisfies sufficient decrease and has the lowest value seen
    while trials < opts.max_line_search {
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        let width = b - a;
        if width <= 1e-14 * b.max(1.0) {
            break;
        }
        let margin = 0.1 * width;
        let t = cubic_minimizer(lo.alpha, lo.f, lo.slope, hi.alpha, hi.f, hi.slope, a + margin, b - margin);
        trials += 1;
        let cur = probe(prob, t)?;
        if !armijo(&cur) || cur.f >= lo.f {
            hi = cur;
        } else {
            if curvature(&cur) {
                return Ok(Some(cur));
            }
            if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // settle for sufficient decrease without the curvature condition
    Ok((lo.alpha > 0.0 && lo.f < f0).then_some(lo))
}

fn run(
    prob: &mut Problem<'_, '_>,
    x0: &[f64],
    opts: &BfgsOptions,
) -> std::result::Result<Termination, Halt> {
    let m = x0.len();
    let mut x = x0.to_vec();
    let mut f = prob.value(&x)?;
    let mut g = prob.gradient(&x)?;
    prob.tracker.record();
    if inf_norm(&g) < opts.gtol {
        return Ok(Termination::GradientConverged);
    }

    let identity = |m: usize| {
        let mut h = vec![0.0; m * m];
        for i in 0..m {
            h[i * m + i] = 1.0;
        }
        h
    };
    let mut hinv = identity(m);
    let mut first_update = true;
    let mut f_prev = f + 0.5 * dot(&g, &g).sqrt();

    for _ in 0..opts.max_iterations {
        let mut p: Vec<f64> = (0..m).map(|i| -dot(&hinv[i * m..(i + 1) * m], &g)).collect();
        let mut slope = dot(&g, &p);
        if !(slope < 0.0) {
            hinv = identity(m);
            first_update = true;
            p = g.iter().map(|v| -v).collect();
            slope = dot(&g, &p);
        }
        let mut alpha0 = (1.01 * 2.0 * (f - f_prev) / slope).min(1.0);
        if !(alpha0 > 0.0) {
            alpha0 = 1.0;
        }

        let Some(trial) = strong_wolfe(prob, opts, &x, f, slope, &p, alpha0)? else {
            return Ok(Termination::ConvergedStall);
        };
        prob.stats.iterations += 1;
        let s: Vec<f64> = trial.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = trial.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        f_prev = f;
        x = trial.x;
        f = trial.f;
        g = trial.g;
        prob.tracker.record();

        if inf_norm(&g) < opts.gtol {
            return Ok(Termination::GradientConverged);
        }
        if inf_norm(&s) <= 1e-14 * inf_norm(&x).max(1.0) {
            return Ok(Termination::ConvergedStall);
        }

        let ys = dot(&y, &s);
        if ys > 1e-10 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if first_update {
                let scale = ys / dot(&y, &y);
                hinv.iter_mut().for_each(|v| *v *= scale);
                first_update = false;
            }
            let rho = 1.0 / ys;
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            let hy: Vec<f64> = (0..m).map(|i| dot(&hinv[i * m..(i + 1) * m], &y)).collect();
            let yhy = dot(&y, &hy);
            for i in 0..m {
                for j in 0..m {
                    hinv[i * m + j] += -rho * (hy[i] * s[j] + s[i] * hy[j])
                        + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
    }
    Ok(Termination::BudgetExhausted)
}

/// One local BFGS optimization from `x0`, also returning internal tallies.
pub fn bfgs_optimize_detailed(
    objective: &dyn ScheduleObjective,
    x0: &[f64],
    opts: &BfgsOptions,
) -> Result<(OptimizationResult, BfgsStats)> {
    if x0.is_empty() {
        return Err(Error::Domain("BFGS needs at least one coefficient".into()));
    }
    if !(opts.fd_step > 0.0 && opts.gtol > 0.0) {
        return Err(Error::Domain("BFGS step and tolerance must be positive".into()));
    }
    let mut tracker = Tracker::new(objective, opts.max_evaluations);
    let mut prob = Problem {
        tracker: &mut tracker,
        fd_step: opts.fd_step,
        stats: BfgsStats::default(),
    };
    let termination = match run(&mut prob, x0, opts) {
        Ok(t) => t,
        Err(Halt::Budget) => Termination::BudgetExhausted,
        Err(Halt::Failed(e)) => return Err(e),
    };
    let stats = prob.stats;
    Ok((tracker.finish(termination)?, stats))
}

pub fn bfgs_optimize(
    objective: &dyn ScheduleObjective,
    x0: &[f64],
    opts: &BfgsOptions,
) -> Result<OptimizationResult> {
    bfgs_optimize_detailed(objective, x0, opts).map(|(r, _)| r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MultistartOptions {
    pub num_starts: usize,
    /// Standard deviation of the Gaussian noise on starts after the first.
    pub noise_scale: f64,
    pub local: BfgsOptions,
}

impl Default for MultistartOptions {
    fn default() -> Self {
        MultistartOptions {
            num_starts: 10,
            noise_scale: 0.05,
            local: BfgsOptions::default(),
        }
    }
}

/// Best of several local BFGS runs: the first from the linear schedule
/// (all coefficients zero), the rest from Gaussian perturbations of it.
pub fn multistart_bfgs(
    objective: &dyn ScheduleObjective,
    num_frequencies: usize,
    opts: &MultistartOptions,
    seed: u64,
) -> Result<OptimizationResult> {
    if opts.num_starts == 0 {
        return Err(Error::Domain("multistart BFGS needs at least one start".into()));
    }
    let noise = Normal::new(0.0, opts.noise_scale)
        .map_err(|e| Error::Domain(format!("invalid noise scale {}: {e}", opts.noise_scale)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut best: Option<OptimizationResult> = None;
    let mut trace = Vec::new();
    let mut n_fev = 0;
    for start in 0..opts.num_starts {
        let x0: Vec<f64> = if start == 0 {
            vec![0.0; num_frequencies]
        } else {
            (0..num_frequencies).map(|_| noise.sample(&mut rng)).collect()
        };
        let run = bfgs_optimize(objective, &x0, &opts.local)?;
        let floor = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.best_fidelity);
        trace.extend(run.trace.iter().map(|p| TracePoint {
            n_fev: n_fev + p.n_fev,
            best_fidelity: p.best_fidelity.max(floor),
        }));
        n_fev += run.n_fev;
        if run.best_fidelity > floor {
            best = Some(run);
        }
    }
    let mut result = best.expect("at least one start");
    result.n_fev = n_fev;
    result.trace = trace;
    Ok(result)
}
