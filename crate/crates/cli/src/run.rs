//! `run`: executes every configured run and writes traces plus a summary.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use cobadd::central::{central_solve, DualProjection};
use cobadd::cobadd::{cobadd_solve, CobaddConfig};
use cobadd::oracles::OracleMethod;
use cobadd::trace::RunTrace;

use crate::analysis::{
    abs_errors, agreement_violations, corollary_check, first_within, relative_errors, sandwich_violations,
    tail_mean, weak_duality_violations, Check,
};
use crate::config::{ExperimentConfig, RunConfig, SolverChoice};
use crate::setup::{prepare, Setup};
use crate::CliError;

pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FStar {
    pub value: f64,
    pub provenance: OracleMethod,
    pub tol: f64,
    pub mu_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub name: Option<String>,
    pub n: usize,
    pub d: usize,
    pub seed: Option<u64>,
    pub hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkInfo {
    pub seed: u64,
    pub edges: usize,
    pub avg_degree: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violations {
    pub primal_sandwich: Check,
    pub agreement: Check,
    pub agreement_limit: Check,
    pub weak_duality: usize,
}

impl Violations {
    pub fn total(&self) -> usize {
        self.primal_sandwich.violations()
            + self.agreement.violations()
            + self.agreement_limit.violations()
            + self.weak_duality
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub csv: String,
    pub solver: SolverChoice,
    pub alpha: f64,
    pub phi: Option<usize>,
    #[serde(rename = "K")]
    pub k: usize,
    pub final_f: f64,
    pub final_abs_error: f64,
    pub final_rel_error: f64,
    pub floor_abs_error: f64,
    pub k_to_1pct: Option<usize>,
    pub messages_to_1pct: Option<u64>,
    pub messages_total: u64,
    pub best_dual_value: f64,
    pub phibar: Option<f64>,
    pub bounds_applicable: bool,
    pub c0: Option<f64>,
    pub beta0: Option<f64>,
    pub e_k: Option<f64>,
    pub dual_gap_floor: Option<f64>,
    pub dual_gap_floor_nominal: Option<f64>,
    pub violations: Violations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub instance: InstanceInfo,
    pub f_star: FStar,
    pub min_r: f64,
    pub r: f64,
    pub dual_radius: f64,
    pub network: Option<NetworkInfo>,
    pub runs: Vec<RunSummary>,
    pub total_violations: usize,
}

/// Output of one configured run.
pub struct RunOutput {
    pub summary: RunSummary,
    pub trace: RunTrace,
}

pub fn execute_run(setup: &Setup, run: &RunConfig, beta0: Option<f64>, name: String) -> Result<RunOutput, CliError> {
    let inst = &setup.instance;
    let trace = match run.solver {
        SolverChoice::Centralized => {
            let proj = if run.bounded {
                DualProjection::Bounded(setup.sets)
            } else {
                DualProjection::Unbounded
            };
            central_solve(inst, run.alpha, run.k, &proj)?
        }
        SolverChoice::Cobadd => {
            let net = setup
                .network
                .as_ref()
                .ok_or_else(|| CliError::Config("graph: cobadd runs need a graph section".into()))?;
            let cfg = CobaddConfig {
                alpha: run.alpha,
                phi: run.phi,
                k_max: run.k,
                sets: setup.sets,
                seed: net.config.seed,
                beta0,
            };
            cobadd_solve(inst, &net.w, &cfg)?
        }
    };
    let f_star = setup.oracle.f_star;
    let abs = abs_errors(&trace, f_star);
    let rel = relative_errors(&trace, f_star);
    let last = trace.last().expect("K ≥ 1");
    let hit = first_within(&trace, f_star, 0.01);
    let b = trace.bounds.as_ref();
    let summary = RunSummary {
        csv: format!("{name}.csv"),
        name,
        solver: run.solver,
        alpha: run.alpha,
        phi: trace.phi,
        k: run.k,
        final_f: last.f_ergodic,
        final_abs_error: *abs.last().unwrap(),
        final_rel_error: *rel.last().unwrap(),
        floor_abs_error: tail_mean(&abs),
        k_to_1pct: hit.map(|h| h.0),
        messages_to_1pct: hit.map(|h| h.1),
        messages_total: last.messages_cum,
        best_dual_value: trace.best_dual_value(),
        phibar: b.map(|b| b.phibar),
        bounds_applicable: b.is_none_or(|b| b.applicable),
        c0: trace.c0,
        beta0: b.map(|b| b.beta0),
        e_k: b.map(|b| b.e_k),
        dual_gap_floor: b.and_then(|b| b.dual_gap_floor),
        dual_gap_floor_nominal: b.map(|b| b.dual_gap_floor_nominal),
        violations: Violations {
            primal_sandwich: sandwich_violations(&trace, f_star),
            agreement: agreement_violations(&trace),
            agreement_limit: corollary_check(&trace),
            weak_duality: weak_duality_violations(&trace, f_star),
        },
    };
    Ok(RunOutput { summary, trace })
}

fn write_csv(path: &Path, trace: &RunTrace) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    trace
        .write_csv(BufWriter::new(file))
        .map_err(|e| CliError::Io(path.to_path_buf(), e))
}

/// Runs the whole config, writing `<name>.csv` per run and `summary.json`.
pub fn cmd_run(config: &ExperimentConfig) -> Result<Summary, CliError> {
    if config.runs.is_empty() {
        return Err(CliError::Config("runs: at least one run is required".into()));
    }
    let out_dir: PathBuf = config.output_dir.clone();
    fs::create_dir_all(&out_dir).map_err(|e| CliError::Io(out_dir.clone(), e))?;
    let setup = prepare(config)?;

    let mut names: Vec<String> = config.runs.iter().enumerate().map(|(i, r)| r.label(i)).collect();
    names.sort();
    names.dedup();
    if names.len() != config.runs.len() {
        return Err(CliError::Config("runs: run names must be unique".into()));
    }

    let outputs: Vec<RunOutput> = config
        .runs
        .par_iter()
        .enumerate()
        .map(|(i, run)| {
            let out = execute_run(&setup, run, config.beta0, run.label(i))?;
            write_csv(&out_dir.join(&out.summary.csv), &out.trace)?;
            Ok(out)
        })
        .collect::<Result<_, CliError>>()?;

    let runs: Vec<RunSummary> = outputs.into_iter().map(|o| o.summary).collect();
    let total_violations = runs.iter().map(|r| r.violations.total()).sum();
    let summary = Summary {
        instance: InstanceInfo {
            name: setup.instance.name().map(str::to_owned),
            n: setup.instance.n(),
            d: setup.instance.d(),
            seed: setup.instance.seed(),
            hash: setup.instance.content_hash()?,
        },
        f_star: FStar {
            value: setup.oracle.f_star,
            provenance: setup.oracle.method,
            tol: setup.oracle.certificate.tol,
            mu_star: setup.oracle.mu_star,
        },
        min_r: setup.sets.min_r,
        r: setup.sets.r,
        dual_radius: setup.sets.mu_radius,
        network: setup.network.as_ref().map(|n| NetworkInfo {
            seed: n.config.seed,
            edges: n.graph.edges().len(),
            avg_degree: n.graph.average_degree(),
            nu: n.w.nu(),
        }),
        runs,
        total_violations,
    };
    let path = out_dir.join(SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Config(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(|e| CliError::Io(path, e))?;
    Ok(summary)
}
