//! Reference solvers for ground-truth `f*`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::problem::{local_solutions, DualPoint, ProblemInstance, ORACLE_TOL};
use crate::spectral::{lambda_min, project_psd};

const MAX_BRACKET_DOUBLINGS: usize = 200;
const MAX_BISECTION_ITERS: usize = 400;
/// Nodes whose minimizer moves by more than this across the final
/// bracket are treated as dual-degenerate during primal assembly.
const DEGENERATE_SHIFT: f64 = 1e-6;
const GRID_FEAS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    DualBisection,
    GridSearch,
}

impl OracleMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleMethod::DualBisection => "dual_bisection",
            OracleMethod::GridSearch => "grid_search",
        }
    }
}

/// Residual diagnostics attached to an oracle answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `f(x*)`, which may differ from `f_star` by the assembly error.
    pub primal_value: f64,
    pub ineq_value: f64,
    /// `None` when the instance has no LMI.
    pub lmi_lambda_min: Option<f64>,
    /// `|μ* Σ gᵢ(x*ᵢ)|`
    pub slackness: Option<f64>,
    /// `f(x*) − q(μ*)`
    pub duality_gap: Option<f64>,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub method: OracleMethod,
    pub f_star: f64,
    pub x_star: Vec<f64>,
    pub mu_star: Option<f64>,
    pub certificate: Certificate,
}

impl OracleResult {
    /// Whether `x_star` satisfies every constraint within `tol`.
    pub fn is_feasible(&self, instance: &ProblemInstance, tol: f64) -> bool {
        let boxes = instance
            .nodes()
            .iter()
            .zip(&self.x_star)
            .all(|(node, &x)| x >= node.lo() - tol && x <= node.hi() + tol);
        boxes && self.certificate.ineq_value <= tol && self.certificate.lmi_lambda_min.is_none_or(|l| l >= -tol)
    }
}

fn scalar_dual(mu: f64) -> DualPoint {
    DualPoint {
        mu,
        g: SymMatrix::zeros(0),
    }
}

fn minimizers(instance: &ProblemInstance, mu: f64) -> Result<(Vec<f64>, f64)> {
    let sols = local_solutions(instance, &scalar_dual(mu), ORACLE_TOL)?;
    let q = sols.iter().map(|s| s.q).sum();
    Ok((sols.into_iter().map(|s| s.x).collect(), q))
}

/// Solves an instance without an LMI by bisection on the scalar multiplier.
///
/// `Σ gᵢ(x̃ᵢ(μ))` is nonincreasing in `μ`; the bracket is grown by doubling
/// and then halved until its width is at most `tol`. The primal point is
/// assembled from the minimizers at the feasible end of the bracket, after
/// which dual-degenerate nodes are moved toward their other minimizer until
/// the coupling constraint is met with equality.
pub fn dual_bisection(instance: &ProblemInstance, tol: f64) -> Result<OracleResult> {
    if instance.d() != 0 {
        return Err(Error::NotApplicable(format!(
            "dual bisection needs an instance without an LMI (d = {})",
            instance.d()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Config(format!("bisection tolerance must be positive, got {tol}")));
    }
    let (x0, q0) = minimizers(instance, 0.0)?;
    if instance.constraint_value(&x0) <= 0.0 {
        return finish(instance, x0, q0, 0.0, tol);
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while instance.constraint_value(&minimizers(instance, hi)?.0) > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_BRACKET_DOUBLINGS {
            return Err(Error::Infeasible(
                "coupling constraint stays violated for every multiplier".into(),
            ));
        }
    }
    for _ in 0..MAX_BISECTION_ITERS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if instance.constraint_value(&minimizers(instance, mid)?.0) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let (x_lo, _) = minimizers(instance, lo)?;
    let (mut x, q_hi) = minimizers(instance, hi)?;
    let mut slack = -instance.constraint_value(&x);
    for i in 0..instance.n() {
        if slack <= 0.0 {
            break;
        }
        if (x_lo[i] - x[i]).abs() <= DEGENERATE_SHIFT {
            continue;
        }
        let g = &instance.node(i).g;
        let (from, to) = (x[i], x_lo[i]);
        let base = g.eval(from);
        let gain = g.eval(to) - base;
        if gain <= slack {
            x[i] = to;
            slack -= gain;
            continue;
        }
        // largest t with g(from + t(to − from)) ≤ base + slack
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..MAX_BISECTION_ITERS {
            if b - a <= 1e-15 {
                break;
            }
            let t = 0.5 * (a + b);
            if g.eval(from + t * (to - from)) - base <= slack {
                a = t;
            } else {
                b = t;
            }
        }
        x[i] = from + a * (to - from);
        slack = -instance.constraint_value(&x);
    }
    finish(instance, x, q_hi, hi, tol)
}

fn finish(instance: &ProblemInstance, x: Vec<f64>, q: f64, mu: f64, tol: f64) -> Result<OracleResult> {
    let ev = instance.evaluate_primal(&x)?;
    Ok(OracleResult {
        method: OracleMethod::DualBisection,
        f_star: q,
        certificate: Certificate {
            primal_value: ev.f,
            ineq_value: ev.ineq_value,
            lmi_lambda_min: (instance.d() > 0).then_some(ev.lmi_lambda_min),
            slackness: Some((mu * ev.ineq_value).abs()),
            duality_gap: Some(ev.f - q),
            tol,
        },
        x_star: x,
        mu_star: Some(mu),
    })
}

fn small_lambda_min(a: &SymMatrix) -> Result<f64> {
    match a.dim() {
        0 => Ok(f64::INFINITY),
        1 => Ok(a.get(0, 0)),
        2 => {
            let (p, q, r) = (a.get(0, 0), a.get(0, 1), a.get(1, 1));
            Ok(0.5 * (p + r) - (0.25 * (p - r) * (p - r) + q * q).sqrt())
        }
        _ => lambda_min(a),
    }
}

fn grid_axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut axis: Vec<f64> = (0..=count).map(|j| lo + j as f64 * step).collect();
    if hi - axis[axis.len() - 1] > 1e-12 * (1.0 + hi.abs()) {
        axis.push(hi);
    }
    axis
}

/// Exhaustive search over the product of per-node grids for instances with
/// at most three nodes. Ties keep the first point in lexicographic order.
pub fn grid_search_lmi(instance: &ProblemInstance, step: f64) -> Result<OracleResult> {
    let n = instance.n();
    if n > 3 {
        return Err(Error::NotApplicable(format!("grid search supports n ≤ 3, got {n}")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Config(format!("grid step must be positive, got {step}")));
    }
    let axes: Vec<Vec<f64>> = instance
        .nodes()
        .iter()
        .map(|node| grid_axis(node.lo(), node.hi(), step))
        .collect();
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    let mut best: Option<(f64, Vec<f64>)> = None;
    'outer: loop {
        for i in 0..n {
            x[i] = axes[i][idx[i]];
        }
        if instance.constraint_value(&x) <= GRID_FEAS_TOL {
            let lmin = small_lambda_min(&instance.lmi_matrix(&x))?;
            if lmin >= -GRID_FEAS_TOL {
                let f = instance.objective(&x);
                if best.as_ref().is_none_or(|(bf, _)| f < *bf) {
                    best = Some((f, x.clone()));
                }
            }
        }
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < axes[i].len() {
                continue 'outer;
            }
            idx[i] = 0;
        }
        break;
    }
    let (f, x) = best.ok_or_else(|| Error::Infeasible("no grid point satisfies the constraints".into()))?;
    let ev = instance.evaluate_primal(&x)?;
    Ok(OracleResult {
        method: OracleMethod::GridSearch,
        f_star: f,
        x_star: x,
        mu_star: None,
        certificate: Certificate {
            primal_value: ev.f,
            ineq_value: ev.ineq_value,
            lmi_lambda_min: (instance.d() > 0).then_some(ev.lmi_lambda_min),
            slackness: None,
            duality_gap: None,
            tol: step,
        },
    })
}

/// Picks dual bisection when there is no LMI and a grid search otherwise.
pub fn reference_optimum(instance: &ProblemInstance) -> Result<OracleResult> {
    if instance.d() == 0 {
        dual_bisection(instance, 1e-10)
    } else {
        grid_search_lmi(instance, 1e-3)
    }
}

/// Dykstra's alternating projections between the PSD cone and the
/// Frobenius ball of radius `gamma`.
pub fn dykstra_project(v: &SymMatrix, gamma: f64, iters: usize) -> Result<SymMatrix> {
    let d = v.dim();
    let mut x = v.clone();
    let mut p = SymMatrix::zeros(d);
    let mut q = SymMatrix::zeros(d);
    for _ in 0..iters.max(1) {
        let xp = x.add_scaled(1.0, &p);
        let y = project_psd(&xp)?;
        p = xp.sub(&y);
        let yq = y.add_scaled(1.0, &q);
        let norm = yq.frobenius_norm();
        let next = if norm > gamma { yq.scaled(gamma / norm) } else { yq.clone() };
        q = yq.sub(&next);
        if next == x && p == xp.sub(&y) {
            x = next;
            break;
        }
        x = next;
    }
    Ok(x)
}

/// Oracle answers stored on disk, keyed by instance content hash and method.
#[derive(Debug)]
pub struct OracleCache {
    path: PathBuf,
    entries: BTreeMap<String, OracleResult>,
}

impl OracleCache {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let entries = if path.exists() {
            serde_json::from_str(&fs::read_to_string(&path)?)?
        } else {
            BTreeMap::new()
        };
        Ok(OracleCache { path, entries })
    }

    pub fn key(instance: &ProblemInstance, method: OracleMethod) -> Result<String> {
        Ok(format!("{}:{}", instance.content_hash()?, method.as_str()))
    }

    pub fn get(&self, key: &str) -> Option<&OracleResult> {
        self.entries.get(key)
    }

    /// Returns the cached [`reference_optimum`] or computes and stores it.
    pub fn reference_optimum(&mut self, instance: &ProblemInstance) -> Result<OracleResult> {
        let method = if instance.d() == 0 {
            OracleMethod::DualBisection
        } else {
            OracleMethod::GridSearch
        };
        let key = Self::key(instance, method)?;
        if let Some(hit) = self.entries.get(&key) {
            return Ok(hit.clone());
        }
        let result = reference_optimum(instance)?;
        self.entries.insert(key, result.clone());
        self.save()?;
        Ok(result)
    }

    fn save(&self) -> Result<()> {
        if let Some(parent) = self.path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        fs::write(&self.path, serde_json::to_string_pretty(&self.entries)?)?;
        Ok(())
    }
}
