use serde::{Deserialize, Serialize};

use super::{DualPoint, NodeSpec, ProblemInstance, ScalarFunction};
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Default accuracy of the local minimizers.
pub const ORACLE_TOL: f64 = 1e-10;

const MAX_SEARCH_ITERS: usize = 200;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Minimum of a node's Lagrangian term and the point attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSolution {
    pub q: f64,
    pub x: f64,
}

/// Per-node subgradient bounds: `L` for `gᵢ`, `Q` for `−A₀/n − Aᵢ xᵢ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubgradientBounds {
    pub l: f64,
    pub q: f64,
    pub m: f64,
}

impl SubgradientBounds {
    pub fn new(l: f64, q: f64) -> Self {
        SubgradientBounds { l, q, m: l + q }
    }
}

/// Minimizes `fᵢ(x) + μ gᵢ(x) − tr[(A₀/n + Aᵢ x) G]` over the node's box.
///
/// Closed form for linear, affine and negLog kinds; derivative bisection
/// for custom kinds that supply a derivative; golden-section search
/// otherwise. Ties resolve to the lower end of the minimizing interval.
pub fn local_dual_oracle(
    node: &NodeSpec,
    a0: &SymMatrix,
    dual: &DualPoint,
    n: usize,
    tol: f64,
) -> Result<LocalSolution> {
    let (lo, hi) = node.bounds;
    let mu = dual.mu;
    let shift = node.a.trace_dot(&dual.g);
    let constant = -a0.trace_dot(&dual.g) / n as f64;

    let x = match (node.f.shape(), node.g.shape()) {
        (Some(fs), Some(gs)) => {
            let s = fs.combine(mu, gs);
            closed_form_argmin(s.slope - shift, s.log_weight, lo, hi)
        }
        _ => {
            let value = |x: f64| node.f.eval(x) + mu * node.g.eval(x) - shift * x;
            let has_derivative = node.f.derivative(lo).is_some() && node.g.derivative(lo).is_some();
            if has_derivative {
                let slope = |x: f64| {
                    node.f.derivative(x).unwrap_or(f64::NAN) + mu * node.g.derivative(x).unwrap_or(f64::NAN)
                        - shift
                };
                leftmost_nonnegative_slope(slope, lo, hi, tol)
            } else {
                golden_section(value, lo, hi, tol)
            }
        }
    };

    let q = node.f.eval(x) + mu * node.g.eval(x) - shift * x + constant;
    if !q.is_finite() {
        return Err(Error::MalformedInstance(format!(
            "Lagrangian is not finite at x = {x} (box [{lo}, {hi}])"
        )));
    }
    Ok(LocalSolution { q, x })
}

/// argmin of `slope·x − weight·log(1+x)` on `[lo, hi]`, `weight ≥ 0`.
fn closed_form_argmin(slope: f64, weight: f64, lo: f64, hi: f64) -> f64 {
    if weight == 0.0 {
        return if slope < 0.0 { hi } else { lo };
    }
    let d = |x: f64| slope - weight / (1.0 + x);
    if d(lo) >= 0.0 {
        lo
    } else if d(hi) <= 0.0 {
        hi
    } else {
        (weight / slope - 1.0).clamp(lo, hi)
    }
}

fn leftmost_nonnegative_slope(slope: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    if slope(lo) >= 0.0 {
        return lo;
    }
    if slope(hi) < 0.0 {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..MAX_SEARCH_ITERS {
        if b - a <= tol {
            break;
        }
        let m = 0.5 * (a + b);
        if slope(m) >= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    b
}

fn golden_section(value: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (value(c), value(d));
    for _ in 0..MAX_SEARCH_ITERS {
        if b - a <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = value(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = value(d);
        }
    }
    // best of the bracket midpoint and the two box endpoints, lowest x on ties
    let mut best = 0.5 * (a + b);
    let mut best_val = value(best);
    for x in [hi, lo] {
        let v = value(x);
        if v < best_val || (v == best_val && x < best) {
            best = x;
            best_val = v;
        }
    }
    if best == lo {
        return lo;
    }
    // walk to the left end of the level set {value ≤ best_val}
    let (mut left, mut right) = (lo, best);
    for _ in 0..MAX_SEARCH_ITERS {
        if right - left <= tol {
            break;
        }
        let m = 0.5 * (left + right);
        if value(m) <= best_val {
            right = m;
        } else {
            left = m;
        }
    }
    right
}

/// `(gᵢ(x), −A₀/n − Aᵢ x)`
pub fn node_subgradient(node: &NodeSpec, a0: &SymMatrix, x: f64, n: usize) -> (f64, SymMatrix) {
    let h = node.g.eval(x);
    let q = a0.scaled(-1.0 / n as f64).add_scaled(-x, &node.a);
    (h, q)
}

/// Local oracle outputs for every node at a shared dual point.
pub fn local_solutions(instance: &ProblemInstance, dual: &DualPoint, tol: f64) -> Result<Vec<LocalSolution>> {
    let n = instance.n();
    instance
        .nodes()
        .iter()
        .map(|node| local_dual_oracle(node, instance.a0(), dual, n, tol))
        .collect()
}

/// Dual function `q(μ, G) = Σ qᵢ(μ, G)`.
pub fn dual_value(instance: &ProblemInstance, dual: &DualPoint, tol: f64) -> Result<f64> {
    let n = instance.n();
    let mut total = 0.0;
    for node in instance.nodes() {
        total += local_dual_oracle(node, instance.a0(), dual, n, tol)?.q;
    }
    Ok(total)
}

/// Computes `L = maxᵢ max |gᵢ|` and `Q = maxᵢ max ‖−A₀/n − Aᵢ x‖_F`.
///
/// Monotone kinds and the (convex in x) matrix norm are maximized at the
/// box endpoints. Custom constraint functions use a `grid`-point scan plus
/// a golden-section search for their interior minimum.
pub fn subgradient_bounds(instance: &ProblemInstance, grid: usize) -> Result<SubgradientBounds> {
    if grid < 2 {
        return Err(Error::Config(format!("grid must have at least 2 points, got {grid}")));
    }
    let n = instance.n();
    let mut l: f64 = 0.0;
    let mut q: f64 = 0.0;
    for node in instance.nodes() {
        let (lo, hi) = node.bounds;
        l = l.max(max_abs(&node.g, lo, hi, grid));
        for x in [lo, hi] {
            q = q.max(node_subgradient(node, instance.a0(), x, n).1.frobenius_norm());
        }
    }
    if !(l.is_finite() && q.is_finite()) {
        return Err(Error::MalformedInstance("subgradient bound is not finite".into()));
    }
    Ok(SubgradientBounds::new(l, q))
}

fn max_abs(g: &ScalarFunction, lo: f64, hi: f64, grid: usize) -> f64 {
    let mut best = g.eval(lo).abs().max(g.eval(hi).abs());
    if g.is_monotone() {
        return best;
    }
    for k in 0..grid {
        let x = lo + (hi - lo) * k as f64 / (grid - 1) as f64;
        best = best.max(g.eval(x).abs());
    }
    let xmin = golden_section(|x| g.eval(x), lo, hi, ORACLE_TOL);
    best.max(g.eval(xmin).abs())
}
