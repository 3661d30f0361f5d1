use std::io::{Read, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate, write_summary_csv};
use super::config::{ExperimentConfig, InstanceSource, Method, ProblemKind};
use crate::dynamics::{AnnealingEvaluator, EvolutionConfig};
use crate::error::{Error, Result};
use crate::optimizers::{linear_baseline, mcts_optimize, multistart_bfgs, OptimizationResult};
use crate::problems::{
    generate_hard_sat, maxcut_hamiltonian, sample_cubic_graph, sat_hamiltonian, CnfInstance, CutGraph,
    DiagonalHamiltonian,
};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_ECHO_FILE: &str = "config.json";

/// One optimization outcome; a failed task has non-finite observables and a
/// `failed: …` termination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance_id: String,
    pub method: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub fidelity: f64,
    pub energy: f64,
    pub n_fev: u64,
    pub termination: String,
    pub wall_time_s: f64,
    pub seed: u64,
}

impl ResultRow {
    pub fn failed(&self) -> bool {
        self.termination.starts_with("failed")
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub id: String,
    pub hamiltonian: DiagonalHamiltonian,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Stable per-task seed from the master seed and the task coordinates.
pub fn derive_seed(master: u64, instance_id: &str, method: Method, m: usize, t: f64) -> u64 {
    [fnv1a(instance_id.as_bytes()), method.code(), m as u64, t.to_bits()]
        .into_iter()
        .fold(splitmix64(master), |acc, v| splitmix64(acc ^ v))
}

fn read_file(path: &Path) -> Result<String> {
    let mut text = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    Ok(text)
}

fn file_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn load_problem_file(kind: ProblemKind, path: &Path, max_qubits: usize) -> Result<Instance> {
    let text = read_file(path)?;
    let annotate = |e: Error| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    };
    let hamiltonian = match kind {
        ProblemKind::Sat3 => sat_hamiltonian(&CnfInstance::parse_dimacs(&text).map_err(annotate)?, max_qubits)?,
        ProblemKind::Maxcut => maxcut_hamiltonian(&CutGraph::parse_edge_list(&text).map_err(annotate)?, max_qubits)?,
    };
    Ok(Instance {
        id: file_id(path),
        hamiltonian,
    })
}

/// Seed of the `index`-th instance drawn from a generator source.
pub fn generated_seed(seed: u64, index: usize) -> u64 {
    splitmix64(seed ^ splitmix64(index as u64))
}

pub fn generated_id(kind: ProblemKind, n: usize, seed: u64, index: usize) -> String {
    let prefix = match kind {
        ProblemKind::Sat3 => "sat3",
        ProblemKind::Maxcut => "cubic",
    };
    format!("{prefix}_n{n}_s{seed}_{index}")
}

/// Materializes every instance before any optimization runs.
pub fn load_instances(cfg: &ExperimentConfig) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for src in &cfg.instance_sources {
        match src {
            InstanceSource::File(path) => out.push(load_problem_file(cfg.problem_kind, path, cfg.max_qubits)?),
            &InstanceSource::Generate { n, count, seed } => {
                for index in 0..count {
                    let s = generated_seed(seed, index);
                    let hamiltonian = match cfg.problem_kind {
                        ProblemKind::Sat3 => sat_hamiltonian(&generate_hard_sat(n, s, Default::default())?, cfg.max_qubits)?,
                        ProblemKind::Maxcut => {
                            maxcut_hamiltonian(&sample_cubic_graph(n, s, Default::default())?, cfg.max_qubits)?
                        }
                    };
                    out.push(Instance {
                        id: generated_id(cfg.problem_kind, n, seed, index),
                        hamiltonian,
                    });
                }
            }
        }
    }
    let mut ids = std::collections::HashSet::new();
    if let Some(dup) = out.iter().find(|i| !ids.insert(i.id.as_str())) {
        return Err(Error::Config(format!("duplicate instance id `{}`", dup.id)));
    }
    Ok(out)
}

/// Runs one (instance, method, M, T) task with its derived seed.
pub fn run_task(
    cfg: &ExperimentConfig,
    h: &DiagonalHamiltonian,
    method: Method,
    m: usize,
    t: f64,
    seed: u64,
) -> Result<OptimizationResult> {
    let evo = EvolutionConfig {
        dt: cfg.dt,
        driver: cfg.driver,
        ..Default::default()
    };
    let evaluator = AnnealingEvaluator::new(h, t, evo)?;
    let result = match method {
        Method::Linear => linear_baseline(&evaluator)?,
        Method::Bfgs => multistart_bfgs(&evaluator, m, &cfg.bfgs, seed)?,
        Method::Mcts => mcts_optimize(&evaluator, m, &cfg.mcts, seed)?,
    };
    debug_assert_eq!(result.n_fev, evaluator.counter().get());
    Ok(result)
}

struct Task<'a> {
    instance: &'a Instance,
    method: Method,
    m: usize,
    t: f64,
}

fn execute(cfg: &ExperimentConfig, task: &Task<'_>) -> ResultRow {
    let seed = derive_seed(cfg.master_seed, &task.instance.id, task.method, task.m, task.t);
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        run_task(cfg, &task.instance.hamiltonian, task.method, task.m, task.t, seed)
    }));
    let wall_time_s = start.elapsed().as_secs_f64();
    let (fidelity, energy, n_fev, termination) = match outcome {
        Ok(Ok(r)) => (r.best_fidelity, r.best_energy, r.n_fev, r.termination.to_string()),
        Ok(Err(e)) => (f64::NAN, f64::NAN, 0, format!("failed: {e}")),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (f64::NAN, f64::NAN, 0, format!("failed: panic: {msg}"))
        }
    };
    ResultRow {
        instance_id: task.instance.id.clone(),
        method: task.method.as_str().into(),
        m: task.m,
        t: task.t,
        fidelity,
        energy,
        n_fev,
        termination,
        wall_time_s,
        seed,
    }
}

/// Runs the full sweep over pre-loaded instances. Rows come back in task
/// order (instance, method, M, T) regardless of scheduling.
pub fn run_instances(cfg: &ExperimentConfig, instances: &[Instance]) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut tasks = Vec::new();
    for instance in instances {
        for &method in &cfg.methods {
            for &m in &cfg.m_values {
                for &t in &cfg.t_grid {
                    tasks.push(Task { instance, method, m, t });
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| tasks.par_iter().map(|task| execute(cfg, task)).collect()))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let instances = load_instances(cfg)?;
    run_instances(cfg, &instances)
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(RESULT_HEADER)?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub const RESULT_HEADER: [&str; 10] = [
    "instance_id",
    "method",
    "M",
    "T",
    "fidelity",
    "energy",
    "n_fev",
    "termination",
    "wall_time_s",
    "seed",
];

pub fn read_results_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Runs the sweep and writes results, summary and the filled-in config into
/// the output directory. Returns the directory.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<(PathBuf, Vec<ResultRow>)> {
    let rows = run_experiment(cfg)?;
    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;

    let path = dir.join(RESULTS_FILE);
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_results_csv(&rows, std::io::BufWriter::new(file))?;

    let path = dir.join(SUMMARY_FILE);
    let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_summary_csv(&aggregate(&rows), std::io::BufWriter::new(file))?;

    let path = dir.join(CONFIG_ECHO_FILE);
    let mut echoed = cfg.clone();
    echoed.output = Some(dir.clone());
    std::fs::write(&path, echoed.to_json()?).map_err(|e| Error::io(&path, e))?;
    Ok((dir, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(methods: &str, t_grid: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"problem_kind": "sat3",
                "instance_sources": [{{"generate": {{"n": 5, "count": 2, "seed": 4}}}}],
                "methods": {methods}, "T_grid": {t_grid}, "M_values": [2],
                "master_seed": 7}}"#
        ))
        .unwrap()
    }

    #[test]
    fn one_row_per_task() {
        let rows = run_experiment(&config(r#"["linear"]"#, "[1.0, 2.0, 3.0]")).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.n_fev == 1 && (0.0..=1.0).contains(&r.fidelity)));
        assert_eq!(rows[0].instance_id, "sat3_n5_s4_0");
        assert_eq!(rows[3].instance_id, "sat3_n5_s4_1");
    }

    #[test]
    fn seeds_depend_on_every_coordinate() {
        let base = derive_seed(1, "a", Method::Mcts, 3, 2.0);
        assert_eq!(base, derive_seed(1, "a", Method::Mcts, 3, 2.0));
        for other in [
            derive_seed(2, "a", Method::Mcts, 3, 2.0),
            derive_seed(1, "b", Method::Mcts, 3, 2.0),
            derive_seed(1, "a", Method::Bfgs, 3, 2.0),
            derive_seed(1, "a", Method::Mcts, 4, 2.0),
            derive_seed(1, "a", Method::Mcts, 3, 2.5),
        ] {
            assert_ne!(base, other);
        }
    }

    #[test]
    fn missing_file_fails_before_running() {
        let mut cfg = config(r#"["linear"]"#, "[1.0]");
        cfg.instance_sources.push(InstanceSource::File("/nonexistent/x.cnf".into()));
        assert!(matches!(run_experiment(&cfg), Err(Error::Io { .. })));
    }

    #[test]
    fn csv_header_is_stable() {
        let mut buf = Vec::new();
        write_results_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim_end(),
            "instance_id,method,M,T,fidelity,energy,n_fev,termination,wall_time_s,seed"
        );
        let rows = run_experiment(&config(r#"["linear"]"#, "[1.5]")).unwrap();
        let mut buf = Vec::new();
        write_results_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("instance_id,method,M,T,fidelity,energy,n_fev,termination,wall_time_s,seed\n"));
        assert_eq!(read_results_csv(text.as_bytes()).unwrap(), rows);
    }

    #[test]
    fn task_errors_become_failed_rows() {
        let cfg = config(r#"["mcts"]"#, "[1.0]");
        let instances = load_instances(&cfg).unwrap();
        let mut broken = cfg.clone();
        broken.mcts.grid_size = 1;
        let cfg_ok = cfg;
        // validation would reject the broken grid, so bypass it per task
        let row = execute(
            &broken,
            &Task {
                instance: &instances[0],
                method: Method::Mcts,
                m: 2,
                t: 1.0,
            },
        );
        assert!(row.failed(), "{row:?}");
        assert!(row.fidelity.is_nan());
        assert!(!run_instances(&cfg_ok, &instances).unwrap()[0].failed());
    }
}
