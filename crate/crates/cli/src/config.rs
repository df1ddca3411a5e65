//! Experiment configuration files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    Builtin {
        builtin: BuiltinInstance,
        #[serde(default)]
        n: Option<usize>,
        #[serde(default)]
        seed: Option<u64>,
    },
    Path {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinInstance {
    Num,
    Lmi,
    LmiCoupled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    #[serde(default)]
    pub n: Option<usize>,
    pub avg_degree: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Centralized,
    Cobadd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub solver: SolverChoice,
    pub alpha: f64,
    #[serde(default = "default_phi")]
    pub phi: usize,
    #[serde(rename = "K")]
    pub k: usize,
    /// Centralized runs only: project onto the bounded dual sets.
    #[serde(default)]
    pub bounded: bool,
}

fn default_phi() -> usize {
    1
}

impl RunConfig {
    pub fn label(&self, index: usize) -> String {
        if let Some(name) = &self.name {
            return name.clone();
        }
        match self.solver {
            SolverChoice::Centralized => format!("run{index}_centralized_a{}", self.alpha),
            SolverChoice::Cobadd => format!("run{index}_cobadd_phi{}_a{}", self.phi, self.alpha),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub corrupt_weights: bool,
    #[serde(default = "default_verify_n")]
    pub n: usize,
    #[serde(default = "default_verify_k", rename = "K")]
    pub k: usize,
    #[serde(default = "default_verify_degree")]
    pub avg_degree: f64,
    #[serde(default = "default_verify_alpha")]
    pub alpha: f64,
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}
fn default_verify_n() -> usize {
    20
}
fn default_verify_k() -> usize {
    300
}
fn default_verify_degree() -> f64 {
    3.0
}
fn default_verify_alpha() -> f64 {
    0.5
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seeds: default_seeds(),
            corrupt_weights: false,
            n: default_verify_n(),
            k: default_verify_k(),
            avg_degree: default_verify_degree(),
            alpha: default_verify_alpha(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub instance: InstanceSource,
    #[serde(default)]
    pub graph: Option<GraphConfig>,
    #[serde(default)]
    pub runs: Vec<RunConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Margin added to the smallest admissible radius parameter.
    #[serde(default)]
    pub r: Option<f64>,
    #[serde(default)]
    pub beta0: Option<f64>,
    #[serde(default)]
    pub slater: Option<Vec<f64>>,
    #[serde(default)]
    pub verify: Option<VerifyConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn field(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{path}: {msg}"))
}

impl ExperimentConfig {
    /// Reads a config and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        if let InstanceSource::Path { path: p } = &mut cfg.instance {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if let InstanceSource::Builtin { builtin, n, .. } = &self.instance {
            match builtin {
                BuiltinInstance::Num => {
                    if n.is_none_or(|n| n == 0) {
                        return Err(field("instance.n", "the num instance needs n ≥ 1"));
                    }
                }
                BuiltinInstance::Lmi | BuiltinInstance::LmiCoupled => {
                    if n.is_some_and(|n| n != 2) {
                        return Err(field("instance.n", "the LMI instances have exactly 2 nodes"));
                    }
                }
            }
        }
        if let Some(g) = &self.graph {
            if !(g.avg_degree > 0.0 && g.avg_degree.is_finite()) {
                return Err(field("graph.avg_degree", format!("must be positive, got {}", g.avg_degree)));
            }
        }
        for (i, run) in self.runs.iter().enumerate() {
            let at = |name: &str| format!("runs[{i}].{name}");
            if !(run.alpha > 0.0 && run.alpha.is_finite()) {
                return Err(field(&at("alpha"), format!("must be positive, got {}", run.alpha)));
            }
            if run.phi == 0 {
                return Err(field(&at("phi"), "must be at least 1"));
            }
            if run.k == 0 {
                return Err(field(&at("K"), "must be at least 1"));
            }
            if run.solver == SolverChoice::Cobadd && self.graph.is_none() {
                return Err(field("graph", "cobadd runs need a graph section"));
            }
        }
        if let Some(r) = self.r {
            if !(r > 0.0 && r.is_finite()) {
                return Err(field("r", format!("must be positive, got {r}")));
            }
        }
        if let Some(b) = self.beta0 {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(field("beta0", format!("must be nonnegative, got {b}")));
            }
        }
        if let Some(v) = &self.verify {
            if v.seeds.is_empty() {
                return Err(field("verify.seeds", "must not be empty"));
            }
            if v.n < 2 {
                return Err(field("verify.n", "must be at least 2"));
            }
            if v.k == 0 {
                return Err(field("verify.K", "must be at least 1"));
            }
        }
        Ok(())
    }

    /// Replaces the instance, graph and verification seeds.
    pub fn override_seed(&mut self, seed: u64) {
        if let InstanceSource::Builtin { seed: s, .. } = &mut self.instance {
            *s = Some(seed);
        }
        if let Some(g) = &mut self.graph {
            g.seed = seed;
        }
        if let Some(v) = &mut self.verify {
            v.seeds = vec![seed];
        }
    }
}
