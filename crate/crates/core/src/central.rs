//! Dual decomposition with ergodic primal recovery, run by a single master.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::CentralBounds;
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::problem::{
    dual_value, local_dual_oracle, subgradient_bounds, DualPoint, DualSetSpec, ProblemInstance, ORACLE_TOL,
};
use crate::spectral::{project_g, project_mu, project_psd};
use crate::trace::{RunTrace, SolverKind, TraceRow};

/// Grid used for subgradient bounds of custom constraint kinds.
pub const SUBGRADIENT_GRID: usize = 10_001;

/// Target of the dual projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DualProjection {
    /// `ℝ₊ × 𝕊₊ᵈ`
    Unbounded,
    /// `D_μ × D_G`
    Bounded(DualSetSpec),
}

impl DualProjection {
    pub fn project(&self, mu: f64, g: &SymMatrix) -> Result<DualPoint> {
        match self {
            DualProjection::Unbounded => Ok(DualPoint {
                mu: mu.max(0.0),
                g: project_psd(g)?,
            }),
            DualProjection::Bounded(sets) => Ok(DualPoint {
                mu: project_mu(mu, sets.mu_radius),
                g: project_g(g, sets.g_radius)?,
            }),
        }
    }

    pub fn sets(&self) -> Option<DualSetSpec> {
        match self {
            DualProjection::Unbounded => None,
            DualProjection::Bounded(s) => Some(*s),
        }
    }
}

/// Iterate of the centralized method.
///
/// The first step only computes `x̃⁰` and moves the dual; later steps add
/// `x̃ᵏ` into the ergodic sum, so `ergodic_x = tilde_history_sum / k` with
/// `k` counting accumulated points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralState {
    pub dual: DualPoint,
    pub ergodic_x: Vec<f64>,
    pub k: usize,
    pub tilde_history_sum: Vec<f64>,
    pub tilde_x: Vec<f64>,
    pub primed: bool,
}

impl CentralState {
    pub fn new(dual: DualPoint, n: usize) -> Self {
        CentralState {
            dual,
            ergodic_x: vec![0.0; n],
            k: 0,
            tilde_history_sum: vec![0.0; n],
            tilde_x: vec![0.0; n],
            primed: false,
        }
    }

    /// `μ⁰ = 0`, `G⁰ = 0`.
    pub fn zero(instance: &ProblemInstance) -> Self {
        Self::new(DualPoint::zero(instance.d()), instance.n())
    }
}

pub(crate) fn local_minimizers(instance: &ProblemInstance, duals: &[&DualPoint]) -> Result<Vec<f64>> {
    let n = instance.n();
    instance
        .nodes()
        .par_iter()
        .zip(duals.par_iter())
        .map(|(node, dual)| local_dual_oracle(node, instance.a0(), dual, n, ORACLE_TOL).map(|s| s.x))
        .collect()
}

pub(crate) fn accumulate(primed: &mut bool, k: &mut usize, sum: &mut [f64], ergodic: &mut [f64], tilde: &[f64]) {
    if !*primed {
        *primed = true;
        return;
    }
    *k += 1;
    for ((s, e), t) in sum.iter_mut().zip(ergodic.iter_mut()).zip(tilde) {
        *s += t;
        *e = *s / *k as f64;
    }
}

/// One iteration: local minimizers at the shared dual, ergodic update,
/// then `μ ← P[μ + α Σ gᵢ(x̃ᵢ)]`, `G ← P[G − α(A₀ + Σ Aᵢ x̃ᵢ)]`.
pub fn central_step(
    instance: &ProblemInstance,
    state: &CentralState,
    alpha: f64,
    projection: &DualProjection,
) -> Result<CentralState> {
    if !(alpha > 0.0) {
        return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
    }
    let shared: Vec<&DualPoint> = vec![&state.dual; instance.n()];
    let tilde = local_minimizers(instance, &shared)?;
    let mut next = state.clone();
    accumulate(
        &mut next.primed,
        &mut next.k,
        &mut next.tilde_history_sum,
        &mut next.ergodic_x,
        &tilde,
    );
    let g_sum = instance.constraint_value(&tilde);
    let lmi = instance.lmi_matrix(&tilde);
    next.dual = projection.project(state.dual.mu + alpha * g_sum, &state.dual.g.add_scaled(-alpha, &lmi))?;
    next.tilde_x = tilde;
    Ok(next)
}

/// Runs `k_max` recorded iterations from `μ⁰ = 0`, `G⁰ = 0`.
///
/// Bound columns use the largest dual norms reached during the run and a
/// star topology for message counts (`2n` per iteration).
pub fn central_solve(
    instance: &ProblemInstance,
    alpha: f64,
    k_max: usize,
    projection: &DualProjection,
) -> Result<RunTrace> {
    if k_max == 0 {
        return Err(Error::Config("K must be at least 1".into()));
    }
    let per_round = 2 * instance.n() as u64;
    let mut state = CentralState::zero(instance);
    let mut lambda0 = state.dual.mu.abs();
    let mut gamma0 = state.dual.g.frobenius_norm();
    state = central_step(instance, &state, alpha, projection)?;
    let mut rows = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        lambda0 = lambda0.max(state.dual.mu.abs());
        gamma0 = gamma0.max(state.dual.g.frobenius_norm());
        let q = dual_value(instance, &state.dual, ORACLE_TOL)?;
        state = central_step(instance, &state, alpha, projection)?;
        let ev = instance.evaluate_primal(&state.ergodic_x)?;
        rows.push(TraceRow {
            k,
            f_ergodic: ev.f,
            viol_ineq: ev.violation_ineq,
            viol_lmi: ev.violation_lmi,
            q_best_node: q,
            q_mean: q,
            disagreement: 0.0,
            messages_cum: k as u64 * per_round,
            bound_upper: f64::NAN,
            bound_lower: f64::NAN,
            beta_k: f64::NAN,
        });
    }
    lambda0 = lambda0.max(state.dual.mu.abs());
    gamma0 = gamma0.max(state.dual.g.frobenius_norm());

    let sb = subgradient_bounds(instance, SUBGRADIENT_GRID)?;
    let cb = CentralBounds {
        alpha,
        n: instance.n(),
        l: sb.l,
        q: sb.q,
        lambda0,
        gamma0,
    };
    for row in &mut rows {
        row.bound_upper = cb.upper_gap(row.k);
        row.bound_lower = cb.lower_gap(row.k);
    }
    Ok(RunTrace {
        solver: SolverKind::Centralized,
        alpha,
        phi: None,
        k_max,
        mu_disagreement: vec![0.0; k_max],
        g_disagreement: vec![0.0; k_max],
        rows,
        sets: projection.sets(),
        c0: None,
        bounds: None,
        central_bounds: Some(cb),
        final_x: state.ergodic_x,
        final_duals: vec![state.dual],
    })
}
