//! `verify`: invariant suites over a set of seeds.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use cobadd::central::{central_solve, central_step, CentralState, DualProjection};
use cobadd::cobadd::{admissible_phi, cobadd_solve, cobadd_step, CobaddConfig, CobaddState};
use cobadd::consensus::{metropolis_weights, random_connected_graph, ConsensusMatrix, Graph, MessageLedger};
use cobadd::matrix::SymMatrix;
use cobadd::oracles::{dual_bisection, dykstra_project, grid_search_lmi};
use cobadd::problem::{make_coupled_lmi_instance, make_sample_lmi_instance, make_sample_num_instance, ProblemInstance};
use cobadd::spectral::project_g;
use cobadd::trace::RunTrace;

use crate::analysis::{agreement_violations, corollary_check, sandwich_violations, weak_duality_violations, Check};
use crate::config::{ExperimentConfig, VerifyConfig};
use crate::setup::{dual_sets, slater_point};
use crate::CliError;

pub const PROJECTION_TOL: f64 = 1e-7;
pub const DYKSTRA_ITERS: usize = 10_000;
pub const EQUIVALENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub seed: u64,
    pub status: Status,
    pub detail: String,
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        write!(f, "{tag} {} [seed {}]: {}", self.name, self.seed, self.detail)
    }
}

struct Reporter {
    seed: u64,
    out: Vec<CheckReport>,
}

impl Reporter {
    fn push(&mut self, name: &str, status: Status, detail: impl Into<String>) {
        self.out.push(CheckReport {
            name: name.to_owned(),
            seed: self.seed,
            status,
            detail: detail.into(),
        });
    }

    fn check(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.push(name, if ok { Status::Pass } else { Status::Fail }, detail);
    }

    fn conditional(&mut self, name: &str, check: Check, what: &str) {
        match check {
            Check::Checked(0) => self.push(name, Status::Pass, format!("{what}: 0 violations")),
            Check::Checked(v) => self.push(name, Status::Fail, format!("{what}: {v} violations")),
            Check::Skipped => self.push(name, Status::Skip, "skipped (conditional): phi below phibar"),
        }
    }

    fn error(&mut self, name: &str, e: impl fmt::Display) {
        self.push(name, Status::Fail, format!("error: {e}"));
    }
}

fn random_sym(rng: &mut ChaCha8Rng, d: usize) -> SymMatrix {
    let mut v = SymMatrix::zeros(d);
    for i in 0..d {
        for j in i..d {
            v.set_sym(i, j, rng.gen_range(-3.0..3.0));
        }
    }
    v
}

fn projection_suite(rep: &mut Reporter, rng: &mut ChaCha8Rng) {
    let mut worst = 0.0f64;
    for _ in 0..40 {
        let d = rng.gen_range(2..=4);
        let v = random_sym(rng, d);
        let gamma = rng.gen_range(0.1..5.0);
        match (project_g(&v, gamma), dykstra_project(&v, gamma, DYKSTRA_ITERS)) {
            (Ok(a), Ok(b)) => worst = worst.max(a.distance(&b)),
            (Err(e), _) | (_, Err(e)) => return rep.error("projection_equivalence", e),
        }
    }
    rep.check(
        "projection_equivalence",
        worst <= PROJECTION_TOL,
        format!("max ‖P_G − Dykstra‖_F = {worst:.3e} (≤ {PROJECTION_TOL:e})"),
    );
}

fn consensus_suite(rep: &mut Reporter, rng: &mut ChaCha8Rng, w: &ConsensusMatrix) {
    match w.check_conditions() {
        Ok(()) => rep.check("consensus_conditions", true, format!("W valid, ν = {:.6}", w.nu())),
        Err(e) => rep.check("consensus_conditions", false, e.to_string()),
    }
    let n = w.n();
    let v: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let dev = |p: &[Vec<f64>]| -> f64 {
        let mut total = 0.0;
        for c in 0..3 {
            let mean = p.iter().map(|r| r[c]).sum::<f64>() / n as f64;
            total += p.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>();
        }
        total.sqrt()
    };
    let base = dev(&v);
    let mut ok = true;
    let mut detail = String::new();
    for phi in [1usize, 5, 20] {
        let got = dev(&w.mix(&v, phi));
        let bound = w.nu().powi(phi as i32) * base;
        if got > bound + 1e-12 {
            ok = false;
            detail = format!("φ = {phi}: ‖W^φ v − v̄‖ = {got:.6e} > ν^φ ‖v − v̄‖ = {bound:.6e}");
            break;
        }
    }
    if ok {
        detail = "‖W^φ v − v̄‖ ≤ ν^φ ‖v − v̄‖ for φ ∈ {1, 5, 20}".into();
    }
    rep.check("consensus_contraction", ok, detail);
}

fn trace_checks(rep: &mut Reporter, prefix: &str, trace: &RunTrace, f_star: f64) {
    rep.conditional(&format!("{prefix}.primal_sandwich"), sandwich_violations(trace, f_star), "f* + lower ≤ f(xᵏ) ≤ f* + upper");
    let weak = weak_duality_violations(trace, f_star);
    rep.check(
        &format!("{prefix}.weak_duality"),
        weak == 0,
        format!("q ≤ f* + 1e-7: {weak} violations"),
    );
}

fn cobadd_checks(rep: &mut Reporter, prefix: &str, trace: &RunTrace, f_star: f64) {
    trace_checks(rep, prefix, trace, f_star);
    rep.conditional(&format!("{prefix}.agreement"), agreement_violations(trace), "parts ≤ 2β_(k−1), D ≤ 4β_(k−1)");
    rep.conditional(&format!("{prefix}.agreement_limit"), corollary_check(trace), "tail mean D ≤ 4β∞");
    let sets = trace.sets.expect("cobadd traces carry their sets");
    let inside = trace.final_duals.iter().all(|z| sets.contains(z));
    rep.check(&format!("{prefix}.dual_sets"), inside, "final duals inside D_μ × D_G");
}

fn exact_average_suite(rep: &mut Reporter, inst: &ProblemInstance, cfg: &CobaddConfig, iters: usize) {
    let w = ConsensusMatrix::exact_average(inst.n());
    let proj = DualProjection::Bounded(cfg.sets);
    let step_alpha = cfg.alpha / inst.n() as f64;
    let mut ledger = MessageLedger::default();
    let mut dist = CobaddState::zero(inst);
    let mut cent = CentralState::zero(inst);
    let mut worst = 0.0f64;
    for _ in 0..iters {
        dist = match cobadd_step(inst, &dist, &w, cfg, &mut ledger) {
            Ok(s) => s,
            Err(e) => return rep.error("exact_averaging_equivalence", e),
        };
        cent = match central_step(inst, &cent, step_alpha, &proj) {
            Ok(s) => s,
            Err(e) => return rep.error("exact_averaging_equivalence", e),
        };
        for (node, x) in dist.nodes.iter().zip(&cent.ergodic_x) {
            worst = worst.max(node.dual.distance(&cent.dual)).max((node.ergodic_x - x).abs());
        }
    }
    rep.check(
        "exact_averaging_equivalence",
        worst <= EQUIVALENCE_TOL,
        format!("max deviation {worst:.3e} over {iters} iterations"),
    );
}

fn num_suite(rep: &mut Reporter, v: &VerifyConfig, seed: u64) -> Result<(), CliError> {
    let inst = make_sample_num_instance(v.n, seed);
    let f_star = dual_bisection(&inst, 1e-10)?.f_star;
    let slater = slater_point(&inst, None)?;
    let sets = dual_sets(&inst, &slater, None)?;
    let w = metropolis_weights(&random_connected_graph(v.n, v.avg_degree, seed)?)?;

    let central = central_solve(&inst, v.alpha / v.n as f64, v.k, &DualProjection::Unbounded)?;
    trace_checks(rep, "num.central", &central, f_star);

    let (phi, _) = admissible_phi(&inst, &w, v.alpha, 2)?;
    let mut cfg = CobaddConfig {
        alpha: v.alpha,
        phi,
        k_max: v.k,
        sets,
        seed,
        beta0: None,
    };
    let trace = cobadd_solve(&inst, &w, &cfg)?;
    cobadd_checks(rep, &format!("num.cobadd_phi{phi}"), &trace, f_star);

    cfg.phi = 1;
    let trace = cobadd_solve(&inst, &w, &cfg)?;
    cobadd_checks(rep, "num.cobadd_phi1", &trace, f_star);

    exact_average_suite(rep, &inst, &cfg, v.k);
    Ok(())
}

fn lmi_suite(rep: &mut Reporter, v: &VerifyConfig, seed: u64) -> Result<(), CliError> {
    for (label, inst) in [("lmi", make_sample_lmi_instance()), ("lmi_coupled", make_coupled_lmi_instance())] {
        let f_star = grid_search_lmi(&inst, 1e-3)?.f_star;
        let slater = slater_point(&inst, None)?;
        let sets = dual_sets(&inst, &slater, None)?;
        let central = central_solve(&inst, v.alpha, v.k, &DualProjection::Unbounded)?;
        trace_checks(rep, &format!("{label}.central"), &central, f_star);
        let w = metropolis_weights(&Graph::complete(2))?;
        let cfg = CobaddConfig {
            alpha: v.alpha,
            phi: 1,
            k_max: v.k,
            sets,
            seed,
            beta0: None,
        };
        let trace = cobadd_solve(&inst, &w, &cfg)?;
        cobadd_checks(rep, &format!("{label}.cobadd"), &trace, f_star);
    }
    Ok(())
}

/// Runs every suite for every seed. The caller decides the exit status from
/// the returned reports.
pub fn cmd_verify(config: &ExperimentConfig) -> Result<Vec<CheckReport>, CliError> {
    let v = config.verify.clone().unwrap_or_default();
    let mut all = Vec::new();
    for &seed in &v.seeds {
        let mut rep = Reporter { seed, out: Vec::new() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        projection_suite(&mut rep, &mut rng);
        let mut w = metropolis_weights(&random_connected_graph(v.n, v.avg_degree, seed)?)?;
        if v.corrupt_weights {
            w = w.scaled(1.1)?;
        }
        consensus_suite(&mut rep, &mut rng, &w);
        if let Err(e) = num_suite(&mut rep, &v, seed) {
            rep.error("num", e);
        }
        if let Err(e) = lmi_suite(&mut rep, &v, seed) {
            rep.error("lmi", e);
        }
        all.extend(rep.out);
    }
    Ok(all)
}

pub fn failures(reports: &[CheckReport]) -> usize {
    reports.iter().filter(|r| r.status == Status::Fail).count()
}
