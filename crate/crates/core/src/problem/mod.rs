//! Decomposable convex programs coupled by one scalar inequality and one
//! linear matrix inequality:
//!
//! ```text
//! minimize    Σ fᵢ(xᵢ)            xᵢ ∈ [loᵢ, hiᵢ]
//! subject to  Σ gᵢ(xᵢ) ≤ 0
//!             A₀ + Σ Aᵢ xᵢ ⪰ 0
//! ```

mod dual_sets;
mod function;
mod lagrangian;
mod samples;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::spectral::lambda_min;

pub use dual_sets::{build_dual_sets, min_admissible_r, DualSetSpec, SlaterCertificate};
pub use function::{CustomFunction, ScalarFunction};
pub use lagrangian::{
    dual_value, local_dual_oracle, local_solutions, node_subgradient, subgradient_bounds,
    LocalSolution, SubgradientBounds, ORACLE_TOL,
};
pub use samples::{
    make_coupled_lmi_instance, make_num_instance_with_budget, make_sample_lmi_instance,
    make_sample_num_instance, NUM_BUDGET,
};

/// Numerical PSD slack.
pub const EPS_PSD: f64 = 1e-9;

/// One node of the decomposable program.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeSpec {
    pub f: ScalarFunction,
    pub g: ScalarFunction,
    pub a: SymMatrix,
    #[serde(rename = "box")]
    pub bounds: (f64, f64),
}

impl NodeSpec {
    pub fn new(f: ScalarFunction, g: ScalarFunction, a: SymMatrix, lo: f64, hi: f64) -> Result<Self> {
        let node = NodeSpec {
            f,
            g,
            a,
            bounds: (lo, hi),
        };
        node.validate()?;
        Ok(node)
    }

    pub fn lo(&self) -> f64 {
        self.bounds.0
    }

    pub fn hi(&self) -> f64 {
        self.bounds.1
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo() && x <= self.hi()
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bounds;
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::MalformedInstance(format!("box [{lo}, {hi}] is empty or unbounded")));
        }
        self.f
            .validate(lo, hi)
            .and_then(|_| self.g.validate(lo, hi))
            .map_err(Error::MalformedInstance)
    }
}

/// Problem instance; immutable after construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct ProblemInstance {
    nodes: Vec<NodeSpec>,
    a0: SymMatrix,
    name: Option<String>,
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    d: usize,
    a0: SymMatrix,
    nodes: Vec<NodeSpec>,
}

impl TryFrom<InstanceRepr> for ProblemInstance {
    type Error = Error;

    fn try_from(r: InstanceRepr) -> Result<Self> {
        if r.a0.dim() != r.d {
            return Err(Error::Dimension {
                expected: r.d,
                got: r.a0.dim(),
            });
        }
        for node in &r.nodes {
            node.validate()?;
        }
        let mut inst = ProblemInstance::new(r.nodes, r.a0)?;
        inst.name = r.name;
        inst.seed = r.seed;
        Ok(inst)
    }
}

impl From<ProblemInstance> for InstanceRepr {
    fn from(p: ProblemInstance) -> Self {
        InstanceRepr {
            name: p.name,
            seed: p.seed,
            d: p.a0.dim(),
            a0: p.a0,
            nodes: p.nodes,
        }
    }
}

/// Objective value and constraint violations of a primal point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrimalEvaluation {
    pub f: f64,
    pub violation_ineq: f64,
    pub violation_lmi: f64,
    /// `Σ gᵢ(xᵢ)` before clipping at zero.
    pub ineq_value: f64,
    /// `λ_min(A₀ + Σ Aᵢ xᵢ)`, `+∞` when there is no LMI.
    pub lmi_lambda_min: f64,
}

impl ProblemInstance {
    pub fn new(nodes: Vec<NodeSpec>, a0: SymMatrix) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::MalformedInstance("instance needs at least one node".into()));
        }
        let d = a0.dim();
        if let Some(bad) = nodes.iter().find(|n| n.a.dim() != d) {
            return Err(Error::Dimension {
                expected: d,
                got: bad.a.dim(),
            });
        }
        Ok(ProblemInstance {
            nodes,
            a0,
            name: None,
            seed: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    /// LMI dimension; 0 means there is no LMI.
    pub fn d(&self) -> usize {
        self.a0.dim()
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &NodeSpec {
        &self.nodes[i]
    }

    pub fn a0(&self) -> &SymMatrix {
        &self.a0
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `A₀ + Σ Aᵢ xᵢ`
    pub fn lmi_matrix(&self, x: &[f64]) -> SymMatrix {
        let mut m = self.a0.clone();
        for (node, &xi) in self.nodes.iter().zip(x) {
            m.axpy(xi, &node.a);
        }
        m
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.nodes.iter().zip(x).map(|(n, &xi)| n.f.eval(xi)).sum()
    }

    pub fn constraint_value(&self, x: &[f64]) -> f64 {
        self.nodes.iter().zip(x).map(|(n, &xi)| n.g.eval(xi)).sum()
    }

    /// Cost and constraint violations at `x`.
    pub fn evaluate_primal(&self, x: &[f64]) -> Result<PrimalEvaluation> {
        self.check_point(x)?;
        let f = self.objective(x);
        let ineq_value = self.constraint_value(x);
        let lmi_lambda_min = lambda_min(&self.lmi_matrix(x))?;
        Ok(PrimalEvaluation {
            f,
            violation_ineq: ineq_value.max(0.0),
            violation_lmi: if self.d() == 0 { 0.0 } else { (-lmi_lambda_min).max(0.0) },
            ineq_value,
            lmi_lambda_min,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// SHA-256 of the compact JSON encoding, hex encoded.
    pub fn content_hash(&self) -> Result<String> {
        let bytes = serde_json::to_vec(self)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }
}

/// Dual pair `(μ, G)` with `μ ≥ 0` and `G ⪰ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub mu: f64,
    pub g: SymMatrix,
}

impl DualPoint {
    pub fn new(mu: f64, g: SymMatrix) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::Config(format!("dual mu must be finite and nonnegative, got {mu}")));
        }
        let lmin = lambda_min(&g)?;
        if lmin < -EPS_PSD {
            return Err(Error::Config(format!("dual G is not PSD (λ_min = {lmin:e})")));
        }
        Ok(DualPoint { mu, g })
    }

    pub fn zero(d: usize) -> Self {
        DualPoint {
            mu: 0.0,
            g: SymMatrix::zeros(d),
        }
    }

    pub fn distance(&self, other: &DualPoint) -> f64 {
        let dm = self.mu - other.mu;
        let dg = self.g.distance(&other.g);
        (dm * dm + dg * dg).sqrt()
    }

    /// Stacked payload `(μ, vec(G))`.
    pub fn to_payload(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + self.g.dim() * self.g.dim());
        v.push(self.mu);
        v.extend_from_slice(self.g.as_slice());
        v
    }
}
