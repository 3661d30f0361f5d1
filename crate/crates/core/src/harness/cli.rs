use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use super::aggregate::{aggregate, read_summary_csv, write_summary_csv};
use super::config::{ExperimentConfig, Method, ProblemKind};
use super::plot::plot_summary;
use super::run::{
    generated_id, generated_seed, load_problem_file, read_results_csv, run_sweep, run_task, write_results_csv,
    ResultRow,
};
use crate::error::{Error, Result};
use crate::problems::{generate_hard_sat, sample_cubic_graph, HardSatOptions, DEFAULT_MAX_QUBITS};

#[derive(Debug, Parser)]
#[command(name = "qaschedule", version, about = "Annealing-schedule optimization benchmarks")]
struct Cli {
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Sat3,
    Maxcut,
}

impl From<KindArg> for ProblemKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Sat3 => ProblemKind::Sat3,
            KindArg::Maxcut => ProblemKind::Maxcut,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Linear,
    Bfgs,
    Mcts,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Linear => Method::Linear,
            MethodArg::Bfgs => Method::Bfgs,
            MethodArg::Mcts => Method::Mcts,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate unique-solution 3-SAT instances as DIMACS files.
    GenSat {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Clauses per variable.
        #[arg(long, default_value_t = 3)]
        ratio: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate connected cubic graphs as edge-list files.
    GenGraph {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Optimize one instance with one method and print a result row as CSV.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        /// Problem type; inferred from the extension (.cnf is 3-SAT) if omitted.
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long = "T")]
        total_time: f64,
        #[arg(long = "M", default_value_t = 5)]
        num_frequencies: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = crate::dynamics::DEFAULT_DT)]
        dt: f64,
        /// BFGS local starts.
        #[arg(long)]
        starts: Option<usize>,
        /// MCTS iteration budget.
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Run a sweep described by a JSON config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render SVG charts from a summary (or results) CSV.
    Plot {
        /// summary.csv, or results.csv to aggregate first.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn gen_sat(n: usize, count: usize, seed: u64, ratio: usize, out: &Path) -> Result<Vec<PathBuf>> {
    create_dir(out)?;
    let opts = HardSatOptions {
        clause_ratio: ratio,
        ..Default::default()
    };
    (0..count)
        .map(|i| {
            let s = generated_seed(seed, i);
            let inst = generate_hard_sat(n, s, opts)?;
            let path = out.join(format!("{}.cnf", generated_id(ProblemKind::Sat3, n, seed, i)));
            let text = format!("c unique-solution 3-SAT, generator seed {s}\n{}", inst.to_dimacs());
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

fn gen_graph(n: usize, count: usize, seed: u64, out: &Path) -> Result<Vec<PathBuf>> {
    create_dir(out)?;
    (0..count)
        .map(|i| {
            let s = generated_seed(seed, i);
            let g = sample_cubic_graph(n, s, Default::default())?;
            let path = out.join(format!("{}.graph", generated_id(ProblemKind::Maxcut, n, seed, i)));
            let text = format!("# connected cubic graph, sampler seed {s}\n{}", g.to_edge_list());
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn solve(
    problem: &Path,
    kind: Option<KindArg>,
    method: Method,
    total_time: f64,
    m: usize,
    seed: u64,
    dt: f64,
    starts: Option<usize>,
    budget: Option<u64>,
) -> Result<ResultRow> {
    let kind = kind.map(ProblemKind::from).unwrap_or_else(|| {
        if problem.extension().is_some_and(|e| e == "cnf") {
            ProblemKind::Sat3
        } else {
            ProblemKind::Maxcut
        }
    });
    let mut cfg = ExperimentConfig {
        problem_kind: kind,
        instance_sources: vec![super::config::InstanceSource::File(problem.to_path_buf())],
        methods: vec![method],
        t_grid: vec![total_time],
        m_values: vec![if method == Method::Linear { 0 } else { m }],
        dt,
        driver: Default::default(),
        bfgs: Default::default(),
        mcts: Default::default(),
        master_seed: seed,
        output: None,
        threads: None,
        max_qubits: DEFAULT_MAX_QUBITS,
    };
    if let Some(s) = starts {
        cfg.bfgs.num_starts = s;
    }
    if let Some(b) = budget {
        cfg.mcts.budget = b;
    }
    cfg.validate()?;
    let instance = load_problem_file(kind, problem, cfg.max_qubits)?;
    let start = std::time::Instant::now();
    let r = run_task(&cfg, &instance.hamiltonian, method, cfg.m_values[0], total_time, seed)?;
    Ok(ResultRow {
        instance_id: instance.id,
        method: method.as_str().into(),
        m: cfg.m_values[0],
        t: total_time,
        fidelity: r.best_fidelity,
        energy: r.best_energy,
        n_fev: r.n_fev,
        termination: r.termination.to_string(),
        wall_time_s: start.elapsed().as_secs_f64(),
        seed,
    })
}

fn plot(input: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let header = text.lines().next().unwrap_or_default();
    let summary = if header.starts_with("instance_id,") {
        aggregate(&read_results_csv(text.as_bytes())?)
    } else {
        read_summary_csv(text.as_bytes())?
    };
    plot_summary(&summary, out)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSat { n, count, seed, ratio, out } => {
            for p in gen_sat(n, count, seed, ratio, &out)? {
                println!("{}", p.display());
            }
        }
        Command::GenGraph { n, count, seed, out } => {
            for p in gen_graph(n, count, seed, &out)? {
                println!("{}", p.display());
            }
        }
        Command::Solve {
            problem,
            kind,
            method,
            total_time,
            num_frequencies,
            seed,
            dt,
            starts,
            budget,
        } => {
            let row = solve(&problem, kind, method.into(), total_time, num_frequencies, seed, dt, starts, budget)?;
            let stdout = std::io::stdout();
            write_results_csv(&[row], stdout.lock())?;
        }
        Command::Sweep { config, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if out.is_some() {
                cfg.output = out;
            }
            if cli.threads.is_some() {
                cfg.threads = cli.threads;
            }
            let (dir, rows) = run_sweep(&cfg)?;
            let failed = rows.iter().filter(|r| r.failed()).count();
            eprintln!("{} rows ({failed} failed) written to {}", rows.len(), dir.display());
            let mut summary = Vec::new();
            write_summary_csv(&aggregate(&rows), &mut summary)?;
            std::io::stdout()
                .write_all(&summary)
                .map_err(|e| Error::io("<stdout>", e))?;
        }
        Command::Plot { input, out } => {
            for p in plot(&input, &out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

/// Entry point for the `qaschedule` binary; returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Io { .. } | Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => 2,
                _ => 1,
            }
        }
    }
}
