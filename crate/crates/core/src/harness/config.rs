use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{DriverSign, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::optimizers::{MctsOptions, MultistartOptions};
use crate::problems::DEFAULT_MAX_QUBITS;

/// Directory used when neither the config nor the command line names one.
pub const OUTPUT_DIR_ENV: &str = "QASCHEDULE_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Sat3,
    Maxcut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Linear,
    Bfgs,
    Mcts,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Linear => "linear",
            Method::Bfgs => "bfgs",
            Method::Mcts => "mcts",
        }
    }

    pub(crate) fn code(self) -> u64 {
        self as u64
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Method::Linear),
            "bfgs" => Ok(Method::Bfgs),
            "mcts" => Ok(Method::Mcts),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// Where instances come from: an explicit file or a seeded generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceSource {
    File(PathBuf),
    Generate { n: usize, count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem_kind: ProblemKind,
    pub instance_sources: Vec<InstanceSource>,
    pub methods: Vec<Method>,
    #[serde(rename = "T_grid")]
    pub t_grid: Vec<f64>,
    #[serde(rename = "M_values")]
    pub m_values: Vec<usize>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub driver: DriverSign,
    #[serde(default)]
    pub bfgs: MultistartOptions,
    #[serde(default)]
    pub mcts: MctsOptions,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default = "default_max_qubits")]
    pub max_qubits: usize,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_max_qubits() -> usize {
    DEFAULT_MAX_QUBITS
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// JSON with every default filled in.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.instance_sources.is_empty() {
            return bad("no instance sources".into());
        }
        for src in &self.instance_sources {
            if let InstanceSource::Generate { count: 0, .. } = src {
                return bad("generator source with count 0".into());
            }
        }
        if self.methods.is_empty() {
            return bad("no methods".into());
        }
        if self.t_grid.is_empty() {
            return bad("empty T_grid".into());
        }
        if let Some(t) = self.t_grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return bad(format!("annealing time {t} is not positive"));
        }
        if self.m_values.is_empty() {
            return bad("empty M_values".into());
        }
        let optimizes = self.methods.iter().any(|m| *m != Method::Linear);
        if optimizes && self.m_values.contains(&0) {
            return bad("M = 0 is only meaningful for the linear method".into());
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad(format!("dt {} is not positive", self.dt));
        }
        if self.bfgs.num_starts == 0 || self.bfgs.local.max_evaluations == 0 {
            return bad("BFGS starts and budget must be positive".into());
        }
        if !(self.bfgs.noise_scale >= 0.0) {
            return bad("BFGS noise scale must be non-negative".into());
        }
        if self.mcts.budget == 0 {
            return bad("MCTS budget must be positive".into());
        }
        self.mcts.grid()?;
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        Ok(())
    }

    /// Output directory: the config's, then the environment's, then `results`.
    pub fn output_dir(&self) -> PathBuf {
        self.output
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("results"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "problem_kind": "sat3",
        "instance_sources": [{"generate": {"n": 5, "count": 2, "seed": 1}}, {"file": "a.cnf"}],
        "methods": ["linear", "mcts"],
        "T_grid": [1.0, 2.0],
        "M_values": [3]
    }"#;

    #[test]
    fn defaults_are_filled_in() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.dt, 0.05);
        assert_eq!(cfg.bfgs.num_starts, 10);
        assert_eq!(cfg.bfgs.noise_scale, 0.05);
        assert_eq!(cfg.mcts.budget, 5000);
        assert_eq!(cfg.mcts.grid_size, 40);
        assert_eq!(cfg.mcts.convergence.target_fidelity, Some(0.99));
        assert_eq!(cfg.driver, DriverSign::Positive);
    }

    #[test]
    fn serialization_is_idempotent() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        let once = cfg.to_json().unwrap();
        let twice = ExperimentConfig::from_json(&once).unwrap().to_json().unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let edits = [
            (r#""T_grid": [1.0, 2.0]"#, r#""T_grid": []"#),
            (r#""T_grid": [1.0, 2.0]"#, r#""T_grid": [0.0]"#),
            (r#""methods": ["linear", "mcts"]"#, r#""methods": []"#),
            (r#""methods": ["linear", "mcts"]"#, r#""methods": ["sd"]"#),
            (r#""M_values": [3]"#, r#""M_values": [0]"#),
            (r#""M_values": [3]"#, r#""M_values": [3], "bogus": 1"#),
            (r#""count": 2"#, r#""count": 0"#),
        ];
        for (from, to) in edits {
            let text = MINIMAL.replace(from, to);
            assert!(ExperimentConfig::from_json(&text).is_err(), "{to}");
        }
    }
}
