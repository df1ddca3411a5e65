//! Per-iteration run records and their CSV form.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::bounds::{CentralBounds, TheoreticalBounds};
use crate::problem::{DualPoint, DualSetSpec};

pub const CSV_HEADER: &str =
    "k,f_ergodic,viol_ineq,viol_lmi,q_best_node,q_mean,disagreement,messages_cum,bound_upper,bound_lower,beta_k";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Centralized,
    Cobadd,
}

/// One CSV row. `bound_upper` and `bound_lower` bound `f(xᵏ) − f*`;
/// unavailable values are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub f_ergodic: f64,
    pub viol_ineq: f64,
    pub viol_lmi: f64,
    pub q_best_node: f64,
    pub q_mean: f64,
    pub disagreement: f64,
    pub messages_cum: u64,
    pub bound_upper: f64,
    pub bound_lower: f64,
    pub beta_k: f64,
}

impl TraceRow {
    fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.k,
            self.f_ergodic,
            self.viol_ineq,
            self.viol_lmi,
            self.q_best_node,
            self.q_mean,
            self.disagreement,
            self.messages_cum,
            self.bound_upper,
            self.bound_lower,
            self.beta_k
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub solver: SolverKind,
    pub alpha: f64,
    pub phi: Option<usize>,
    pub k_max: usize,
    pub rows: Vec<TraceRow>,
    /// `maxᵢ |μᵢᵏ − μ̄ᵏ|` per row.
    pub mu_disagreement: Vec<f64>,
    /// `maxᵢ ‖Gᵢᵏ − Ḡᵏ‖_F` per row.
    pub g_disagreement: Vec<f64>,
    pub sets: Option<DualSetSpec>,
    pub c0: Option<f64>,
    pub bounds: Option<TheoreticalBounds>,
    pub central_bounds: Option<CentralBounds>,
    /// Ergodic primal point after the last iteration.
    pub final_x: Vec<f64>,
    /// Per-node duals after the last update (one entry when centralized).
    pub final_duals: Vec<DualPoint>,
}

impl RunTrace {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for row in &self.rows {
            row.write_csv(&mut out)?;
        }
        out.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Largest dual value seen at any node over the run.
    pub fn best_dual_value(&self) -> f64 {
        self.rows.iter().map(|r| r.q_best_node).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `(maxᵢ |μᵢ − μ̄|, maxᵢ ‖Gᵢ − Ḡ‖_F, maxᵢ (|μᵢ − μ̄| + ‖Gᵢ − Ḡ‖_F))`
pub fn disagreement(duals: &[DualPoint]) -> (f64, f64, f64) {
    let n = duals.len() as f64;
    if duals.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mu_bar = duals.iter().map(|z| z.mu).sum::<f64>() / n;
    let mut g_bar = duals[0].g.scaled(0.0);
    for z in duals {
        g_bar.axpy(1.0 / n, &z.g);
    }
    let (mut mu_max, mut g_max, mut both) = (0.0f64, 0.0f64, 0.0f64);
    for z in duals {
        let dm = (z.mu - mu_bar).abs();
        let dg = z.g.distance(&g_bar);
        mu_max = mu_max.max(dm);
        g_max = g_max.max(dg);
        both = both.max(dm + dg);
    }
    (mu_max, g_max, both)
}
