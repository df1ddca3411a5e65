//! Post-run measurements against a reference optimum.

use serde::{Deserialize, Serialize};

use cobadd::trace::{RunTrace, SolverKind};

/// Slack allowed on the primal sandwich inequalities.
pub const SANDWICH_SLACK: f64 = 1e-9;
/// Slack allowed on `q ≤ f*`.
pub const WEAK_DUALITY_SLACK: f64 = 1e-7;
/// Slack allowed on the agreement bounds.
pub const AGREEMENT_SLACK: f64 = 1e-9;

/// Last fraction of the iterations averaged into the error floor.
pub const FLOOR_FRACTION: f64 = 0.1;

pub fn abs_errors(trace: &RunTrace, f_star: f64) -> Vec<f64> {
    trace.rows.iter().map(|r| (f_star - r.f_ergodic).abs()).collect()
}

/// `(f* − f(xᵏ))/f*`
pub fn relative_errors(trace: &RunTrace, f_star: f64) -> Vec<f64> {
    trace.rows.iter().map(|r| (f_star - r.f_ergodic) / f_star).collect()
}

/// Mean of the last `⌈0.1 K⌉` entries.
pub fn tail_mean(values: &[f64]) -> f64 {
    let tail = ((values.len() as f64 * FLOOR_FRACTION).ceil() as usize).clamp(1, values.len().max(1));
    let slice = &values[values.len() - tail..];
    slice.iter().sum::<f64>() / slice.len() as f64
}

/// First row whose relative error magnitude is within `target`, as
/// `(k, messages_cum)`.
pub fn first_within(trace: &RunTrace, f_star: f64, target: f64) -> Option<(usize, u64)> {
    trace
        .rows
        .iter()
        .find(|r| ((f_star - r.f_ergodic) / f_star).abs() <= target)
        .map(|r| (r.k, r.messages_cum))
}

/// Outcome of a conditional check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "violations")]
pub enum Check {
    Checked(usize),
    /// The consensus-step threshold is not met.
    Skipped,
}

impl Check {
    pub fn violations(self) -> usize {
        match self {
            Check::Checked(v) => v,
            Check::Skipped => 0,
        }
    }
}

fn applicable(trace: &RunTrace) -> bool {
    match trace.solver {
        SolverKind::Centralized => true,
        SolverKind::Cobadd => trace.bounds.as_ref().is_some_and(|b| b.applicable),
    }
}

/// Rows where `f(xᵏ) − f*` leaves `[bound_lower, bound_upper]`.
pub fn sandwich_violations(trace: &RunTrace, f_star: f64) -> Check {
    if !applicable(trace) {
        return Check::Skipped;
    }
    Check::Checked(
        trace
            .rows
            .iter()
            .filter(|r| {
                let gap = r.f_ergodic - f_star;
                !(gap <= r.bound_upper + SANDWICH_SLACK && gap >= r.bound_lower - SANDWICH_SLACK)
            })
            .count(),
    )
}

/// Rows where a part exceeds `2β_{k−1}` or the combined disagreement
/// exceeds `4β_{k−1}`.
pub fn agreement_violations(trace: &RunTrace) -> Check {
    let Some(b) = trace.bounds.as_ref().filter(|b| b.applicable) else {
        return Check::Skipped;
    };
    let mut bad = 0;
    for (i, row) in trace.rows.iter().enumerate() {
        let Some(part) = b.agreement_bound(row.k) else {
            bad += 1;
            continue;
        };
        let ok = trace.mu_disagreement[i] <= part + AGREEMENT_SLACK
            && trace.g_disagreement[i] <= part + AGREEMENT_SLACK
            && row.disagreement <= 2.0 * part + AGREEMENT_SLACK;
        if !ok {
            bad += 1;
        }
    }
    Check::Checked(bad)
}

/// Tail mean of the combined disagreement against `4β∞`.
pub fn corollary_check(trace: &RunTrace) -> Check {
    let Some(limit) = trace.bounds.as_ref().and_then(|b| b.agreement_limit()) else {
        return Check::Skipped;
    };
    let d: Vec<f64> = trace.rows.iter().map(|r| r.disagreement).collect();
    Check::Checked(usize::from(tail_mean(&d) > 2.0 * limit + AGREEMENT_SLACK))
}

/// Rows with a recorded dual value above `f* + 1e-7`.
pub fn weak_duality_violations(trace: &RunTrace, f_star: f64) -> usize {
    trace
        .rows
        .iter()
        .filter(|r| r.q_best_node > f_star + WEAK_DUALITY_SLACK || r.q_mean > f_star + WEAK_DUALITY_SLACK)
        .count()
}
