//! Consensus-based dual decomposition: every node keeps its own dual pair
//! and agreement is reached through `φ` local averaging steps per iteration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{theoretical_bounds, TheoreticalBounds};
use crate::central::{accumulate, local_minimizers, SUBGRADIENT_GRID};
use crate::consensus::{consensus_round, min_consensus_steps, ConsensusMatrix, MessageLedger};
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::problem::{dual_value, subgradient_bounds, DualPoint, DualSetSpec, ProblemInstance, ORACLE_TOL};
use crate::spectral::{project_g, project_mu};
use crate::trace::{disagreement, RunTrace, SolverKind, TraceRow};

/// Smallest `β₀` as a multiple of `αM`.
pub const BETA0_FLOOR_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeState {
    pub dual: DualPoint,
    pub tilde_x: f64,
    pub ergodic_x: f64,
    pub tilde_sum: f64,
}

/// All node states plus the shared iteration counters.
///
/// As in the centralized method, the first step only moves the duals and
/// `ergodic_x = tilde_sum / k` afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CobaddState {
    pub nodes: Vec<NodeState>,
    pub k: usize,
    pub primed: bool,
}

impl CobaddState {
    pub fn new(duals: Vec<DualPoint>) -> Self {
        CobaddState {
            nodes: duals
                .into_iter()
                .map(|dual| NodeState {
                    dual,
                    tilde_x: 0.0,
                    ergodic_x: 0.0,
                    tilde_sum: 0.0,
                })
                .collect(),
            k: 0,
            primed: false,
        }
    }

    /// `μᵢ⁰ = 0`, `Gᵢ⁰ = 0` at every node.
    pub fn zero(instance: &ProblemInstance) -> Self {
        Self::new(vec![DualPoint::zero(instance.d()); instance.n()])
    }

    pub fn duals(&self) -> Vec<DualPoint> {
        self.nodes.iter().map(|s| s.dual.clone()).collect()
    }

    pub fn ergodic_x(&self) -> Vec<f64> {
        self.nodes.iter().map(|s| s.ergodic_x).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CobaddConfig {
    pub alpha: f64,
    pub phi: usize,
    pub k_max: usize,
    pub sets: DualSetSpec,
    pub seed: u64,
    /// Overrides `β₀ = max(c₀, 10αM)`.
    pub beta0: Option<f64>,
}

impl CobaddConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.phi == 0 {
            return Err(Error::Config("phi must be at least 1".into()));
        }
        if self.k_max == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        if let Some(b) = self.beta0 {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::Config(format!("beta0 must be nonnegative, got {b}")));
            }
        }
        Ok(())
    }
}

/// Payload `(μⱼ + α gⱼ(x̃ⱼ), vec(Gⱼ − α(A₀/n + Aⱼ x̃ⱼ)))` of every node.
fn payloads(instance: &ProblemInstance, duals: &[&DualPoint], tilde: &[f64], alpha: f64) -> Vec<Vec<f64>> {
    let n = instance.n();
    let a0n = instance.a0().scaled(1.0 / n as f64);
    instance
        .nodes()
        .iter()
        .zip(duals)
        .zip(tilde)
        .map(|((node, dual), &x)| {
            let h = a0n.add_scaled(x, &node.a);
            let mut g = dual.g.clone();
            g.axpy(-alpha, &h);
            DualPoint {
                mu: dual.mu + alpha * node.g.eval(x),
                g,
            }
            .to_payload()
        })
        .collect()
}

fn split_payload(p: &[f64], d: usize) -> Result<(f64, SymMatrix)> {
    Ok((p[0], SymMatrix::from_row_major(d, p[1..].to_vec())?))
}

/// `maxᵢ ‖[(W^φ − 11ᵀ/n) v⁰]ᵢ‖` over the μ and G parts (summed), with
/// `v⁰` the payloads formed at the initial duals.
pub fn compute_c0(
    instance: &ProblemInstance,
    w: &ConsensusMatrix,
    phi: usize,
    alpha: f64,
    initial_duals: &[DualPoint],
) -> Result<f64> {
    let refs: Vec<&DualPoint> = initial_duals.iter().collect();
    let tilde = local_minimizers(instance, &refs)?;
    let v = payloads(instance, &refs, &tilde, alpha);
    let mixed = w.mix(&v, phi);
    let n = v.len() as f64;
    let len = v[0].len();
    let mut mean = vec![0.0; len];
    for p in &v {
        for (m, x) in mean.iter_mut().zip(p) {
            *m += x / n;
        }
    }
    let mut c0 = 0.0f64;
    for p in &mixed {
        let dmu = (p[0] - mean[0]).abs();
        let dg = p[1..]
            .iter()
            .zip(&mean[1..])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        c0 = c0.max(dmu + dg);
    }
    Ok(c0)
}

/// One iteration: local minimizers at each node's own dual, ergodic update,
/// `φ` consensus steps on the payloads, then projection onto `D_μ × D_G`.
pub fn cobadd_step(
    instance: &ProblemInstance,
    state: &CobaddState,
    w: &ConsensusMatrix,
    config: &CobaddConfig,
    ledger: &mut MessageLedger,
) -> Result<CobaddState> {
    let d = instance.d();
    let duals: Vec<&DualPoint> = state.nodes.iter().map(|s| &s.dual).collect();
    let tilde = local_minimizers(instance, &duals)?;
    let v = payloads(instance, &duals, &tilde, config.alpha);
    let mixed = consensus_round(w, &v, config.phi, ledger)?;
    let sets = config.sets;
    let projected: Vec<DualPoint> = mixed
        .par_iter()
        .map(|p| {
            let (mu, g) = split_payload(p, d)?;
            Ok(DualPoint {
                mu: project_mu(mu, sets.mu_radius),
                g: project_g(&g, sets.g_radius)?,
            })
        })
        .collect::<Result<_>>()?;

    let mut next = state.clone();
    let mut sums: Vec<f64> = state.nodes.iter().map(|s| s.tilde_sum).collect();
    let mut erg: Vec<f64> = state.nodes.iter().map(|s| s.ergodic_x).collect();
    accumulate(&mut next.primed, &mut next.k, &mut sums, &mut erg, &tilde);
    for (i, (node, dual)) in next.nodes.iter_mut().zip(projected).enumerate() {
        node.dual = dual;
        node.tilde_x = tilde[i];
        node.tilde_sum = sums[i];
        node.ergodic_x = erg[i];
    }
    Ok(next)
}

/// `β₀ = max(c₀, 10αM)` unless overridden.
pub fn default_beta0(c0: f64, alpha: f64, m: f64) -> f64 {
    c0.max(BETA0_FLOOR_FACTOR * alpha * m)
}

/// Smallest `φ = ⌈φ̄⌉ + margin` consistent with the `β₀` it induces.
///
/// `c₀` depends on `φ` and `φ̄` on `β₀`, so the pair is iterated until the
/// chosen `φ` stops changing.
pub fn admissible_phi(
    instance: &ProblemInstance,
    w: &ConsensusMatrix,
    alpha: f64,
    margin: usize,
) -> Result<(usize, f64)> {
    let m = subgradient_bounds(instance, SUBGRADIENT_GRID)?.m;
    let duals = vec![DualPoint::zero(instance.d()); instance.n()];
    let mut phi = 1usize;
    for _ in 0..64 {
        let beta0 = default_beta0(compute_c0(instance, w, phi, alpha, &duals)?, alpha, m);
        let bound = min_consensus_steps(beta0, alpha, m, instance.n(), instance.d(), w.nu())?;
        let next = bound.phibar.ceil().max(0.0) as usize + margin;
        let next = next.max(1);
        if next == phi {
            return Ok((phi, beta0));
        }
        phi = next;
    }
    Err(Error::ConsensusConditions("consensus step threshold did not settle".into()))
}

/// Full run from zero duals with per-row bound overlays.
pub fn cobadd_solve(instance: &ProblemInstance, w: &ConsensusMatrix, config: &CobaddConfig) -> Result<RunTrace> {
    config.validate()?;
    if w.n() != instance.n() {
        return Err(Error::Dimension {
            expected: instance.n(),
            got: w.n(),
        });
    }
    let mut state = CobaddState::zero(instance);
    let (c0, bounds) = prepare(instance, w, config)?;

    let mut ledger = MessageLedger::default();
    state = cobadd_step(instance, &state, w, config, &mut ledger)?;
    let k_max = config.k_max;
    let mut rows = Vec::with_capacity(k_max);
    let mut mu_dis = Vec::with_capacity(k_max);
    let mut g_dis = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let duals = state.duals();
        let (dm, dg, both) = disagreement(&duals);
        let qs = node_dual_values(instance, &duals)?;
        let messages_cum = ledger.total_messages;
        state = cobadd_step(instance, &state, w, config, &mut ledger)?;
        let ev = instance.evaluate_primal(&state.ergodic_x())?;
        mu_dis.push(dm);
        g_dis.push(dg);
        rows.push(TraceRow {
            k,
            f_ergodic: ev.f,
            viol_ineq: ev.violation_ineq,
            viol_lmi: ev.violation_lmi,
            q_best_node: qs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            q_mean: qs.iter().sum::<f64>() / qs.len() as f64,
            disagreement: both,
            messages_cum,
            bound_upper: bounds.primal_upper_gap(k),
            bound_lower: bounds.primal_lower_gap(k),
            beta_k: bounds.beta(k).unwrap_or(f64::NAN),
        });
    }
    Ok(RunTrace {
        solver: SolverKind::Cobadd,
        alpha: config.alpha,
        phi: Some(config.phi),
        k_max,
        rows,
        mu_disagreement: mu_dis,
        g_disagreement: g_dis,
        sets: Some(config.sets),
        c0: Some(c0),
        bounds: Some(bounds),
        central_bounds: None,
        final_x: state.ergodic_x(),
        final_duals: state.duals(),
    })
}

/// `q(zᵢ)` of the global dual function at every node's dual.
pub fn node_dual_values(instance: &ProblemInstance, duals: &[DualPoint]) -> Result<Vec<f64>> {
    duals
        .par_iter()
        .map(|z| dual_value(instance, z, ORACLE_TOL))
        .collect()
}

/// `c₀` at zero initial duals and the bounds for a configuration.
pub fn prepare(instance: &ProblemInstance, w: &ConsensusMatrix, config: &CobaddConfig) -> Result<(f64, TheoreticalBounds)> {
    let sb = subgradient_bounds(instance, SUBGRADIENT_GRID)?;
    let duals = vec![DualPoint::zero(instance.d()); instance.n()];
    let c0 = compute_c0(instance, w, config.phi, config.alpha, &duals)?;
    let beta0 = config.beta0.unwrap_or_else(|| default_beta0(c0, config.alpha, sb.m));
    let bounds = theoretical_bounds(
        instance.n(),
        instance.d(),
        &config.sets,
        w.nu(),
        config.alpha,
        config.phi,
        &sb,
        beta0,
        config.k_max,
    )?;
    Ok((c0, bounds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::central::{central_step, CentralState, DualProjection};
    use crate::consensus::{metropolis_weights, random_connected_graph, Graph};
    use crate::problem::{make_coupled_lmi_instance, make_sample_num_instance, NodeSpec, ScalarFunction};

    fn config(sets: DualSetSpec, alpha: f64, phi: usize) -> CobaddConfig {
        CobaddConfig {
            alpha,
            phi,
            k_max: 10,
            sets,
            seed: 0,
            beta0: None,
        }
    }

    #[test]
    fn two_node_exact_average_by_hand() {
        // f = −x, g = x − 1 on [0,1], no LMI; complete graph of two nodes
        let node = |c| {
            NodeSpec::new(
                ScalarFunction::linear(c),
                ScalarFunction::affine(1.0, -0.25),
                SymMatrix::zeros(0),
                0.0,
                1.0,
            )
            .unwrap()
        };
        let inst = ProblemInstance::new(vec![node(-1.0), node(1.0)], SymMatrix::zeros(0)).unwrap();
        let w = metropolis_weights(&Graph::complete(2)).unwrap();
        let cfg = config(DualSetSpec::with_radius(5.0), 1.0, 1);
        let mut ledger = MessageLedger::default();
        let mut state = CobaddState::new(vec![
            DualPoint::new(0.0, SymMatrix::zeros(0)).unwrap(),
            DualPoint::new(2.0, SymMatrix::zeros(0)).unwrap(),
        ]);
        state = cobadd_step(&inst, &state, &w, &cfg, &mut ledger).unwrap();
        // node 0 at μ = 0 picks x = 1, g = 0.75 → payload 0.75
        // node 1 at μ = 2 has slope 3,  x = 0, g = −0.25 → payload 1.75
        for s in &state.nodes {
            assert!((s.dual.mu - 1.25).abs() < 1e-15);
        }
        assert_eq!(ledger.total_messages, 2);
    }

    #[test]
    fn exact_averaging_equals_central_bounded() {
        let inst = make_coupled_lmi_instance();
        let sets = DualSetSpec::with_radius(3.0);
        let n = inst.n() as f64;
        let w = ConsensusMatrix::exact_average(inst.n());
        let cfg = config(sets, 0.4, 1);
        let mut ledger = MessageLedger::default();
        let mut dist = CobaddState::zero(&inst);
        let mut cent = CentralState::zero(&inst);
        let proj = DualProjection::Bounded(sets);
        for _ in 0..200 {
            dist = cobadd_step(&inst, &dist, &w, &cfg, &mut ledger).unwrap();
            cent = central_step(&inst, &cent, 0.4 / n, &proj).unwrap();
            for s in &dist.nodes {
                assert!(s.dual.distance(&cent.dual) < 1e-9);
            }
            let xs = dist.ergodic_x();
            for (a, b) in xs.iter().zip(&cent.ergodic_x) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn identical_zero_subgradients_are_fixed() {
        // gᵢ ≡ 0 and no LMI: payloads equal the duals
        let node = NodeSpec::new(
            ScalarFunction::linear(1.0),
            ScalarFunction::zero(),
            SymMatrix::zeros(0),
            0.0,
            1.0,
        )
        .unwrap();
        let inst = ProblemInstance::new(vec![node.clone(), node.clone(), node], SymMatrix::zeros(0)).unwrap();
        let w = metropolis_weights(&Graph::path(3)).unwrap();
        let cfg = config(DualSetSpec::with_radius(2.0), 1.0, 3);
        let start = CobaddState::new(vec![DualPoint::new(0.7, SymMatrix::zeros(0)).unwrap(); 3]);
        let mut ledger = MessageLedger::default();
        let next = cobadd_step(&inst, &start, &w, &cfg, &mut ledger).unwrap();
        for (a, b) in next.nodes.iter().zip(&start.nodes) {
            assert!((a.dual.mu - b.dual.mu).abs() < 1e-15);
        }
    }

    #[test]
    fn c0_vanishes_for_identical_payloads() {
        let node = NodeSpec::new(
            ScalarFunction::linear(-1.0),
            ScalarFunction::affine(1.0, -0.5),
            SymMatrix::zeros(0),
            0.0,
            1.0,
        )
        .unwrap();
        let inst = ProblemInstance::new(vec![node; 4], SymMatrix::zeros(0)).unwrap();
        let w = metropolis_weights(&Graph::path(4)).unwrap();
        let duals = vec![DualPoint::zero(0); 4];
        assert!(compute_c0(&inst, &w, 1, 1.0, &duals).unwrap() < 1e-15);
    }

    #[test]
    fn c0_decays_with_phi() {
        let inst = make_sample_num_instance(30, 2);
        let w = metropolis_weights(&random_connected_graph(30, 4.0, 5).unwrap()).unwrap();
        let duals = vec![DualPoint::zero(0); 30];
        let c1 = compute_c0(&inst, &w, 1, 1.0, &duals).unwrap();
        let c50 = compute_c0(&inst, &w, 50, 1.0, &duals).unwrap();
        let c500 = compute_c0(&inst, &w, 500, 1.0, &duals).unwrap();
        assert!(c1 > c50 && c50 > c500);
        assert!(c500 < 1e-6);
    }

    #[test]
    fn duals_stay_in_sets() {
        let inst = make_coupled_lmi_instance();
        let sets = DualSetSpec::with_radius(1.5);
        let w = metropolis_weights(&Graph::complete(2)).unwrap();
        let cfg = config(sets, 1.0, 1);
        let mut ledger = MessageLedger::default();
        let mut state = CobaddState::zero(&inst);
        for _ in 0..100 {
            state = cobadd_step(&inst, &state, &w, &cfg, &mut ledger).unwrap();
            assert!(state.nodes.iter().all(|s| sets.contains(&s.dual)));
            assert!(state.nodes.iter().all(|s| (0.0..=1.0).contains(&s.ergodic_x)));
        }
    }

    #[test]
    fn trace_shape_and_messages() {
        let inst = make_sample_num_instance(12, 3);
        let graph = random_connected_graph(12, 3.0, 1).unwrap();
        let per_step = graph.messages_per_step();
        let w = metropolis_weights(&graph).unwrap();
        let mut cfg = config(DualSetSpec::with_radius(4.0), 0.5, 2);
        cfg.k_max = 25;
        let trace = cobadd_solve(&inst, &w, &cfg).unwrap();
        assert_eq!(trace.rows.len(), 25);
        for (i, row) in trace.rows.iter().enumerate() {
            assert_eq!(row.k, i + 1);
            assert_eq!(row.messages_cum, (i as u64 + 1) * 2 * per_step);
        }
    }
}
