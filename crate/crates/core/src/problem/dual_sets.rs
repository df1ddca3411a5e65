use serde::{Deserialize, Serialize};

use super::{dual_value, DualPoint, ProblemInstance, ORACLE_TOL};
use crate::error::{Error, Result};
use crate::spectral::lambda_min;

/// A strictly feasible point and its Slater margin `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlaterCertificate {
    pub xbar: Vec<f64>,
    pub gamma: f64,
    pub fxbar: f64,
}

impl SlaterCertificate {
    /// Checks strict feasibility of `xbar` and computes
    /// `γ = min{ −Σ gᵢ(x̄ᵢ), λ_min(A₀ + Σ Aᵢ x̄ᵢ) }` (first term only without an LMI).
    pub fn new(instance: &ProblemInstance, xbar: Vec<f64>) -> Result<Self> {
        if xbar.len() != instance.n() {
            return Err(Error::Dimension {
                expected: instance.n(),
                got: xbar.len(),
            });
        }
        for (i, (node, &x)) in instance.nodes().iter().zip(&xbar).enumerate() {
            if !node.contains(x) {
                return Err(Error::Infeasible(format!("Slater point leaves the box of node {i}")));
            }
        }
        let slack = -instance.constraint_value(&xbar);
        if slack <= 0.0 {
            return Err(Error::Infeasible(format!(
                "Slater point does not satisfy Σ g < 0 strictly (Σ g = {})",
                -slack
            )));
        }
        let gamma = if instance.d() == 0 {
            slack
        } else {
            let lmin = lambda_min(&instance.lmi_matrix(&xbar))?;
            if lmin <= 0.0 {
                return Err(Error::Infeasible(format!(
                    "Slater point does not satisfy the LMI strictly (λ_min = {lmin})"
                )));
            }
            slack.min(lmin)
        };
        let fxbar = instance.objective(&xbar);
        Ok(SlaterCertificate { xbar, gamma, fxbar })
    }
}

/// Radii of the compact projection sets `D_μ = [0, Λ]` and
/// `D_G = {G ⪰ 0, ‖G‖_F ≤ Γ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualSetSpec {
    pub mu_radius: f64,
    pub g_radius: f64,
    pub r: f64,
    /// `(f(x̄) − q(probe))/γ`, the smallest admissible `r`.
    pub min_r: f64,
}

impl DualSetSpec {
    /// Sets of a fixed radius, bypassing the Slater construction.
    pub fn with_radius(radius: f64) -> Self {
        DualSetSpec {
            mu_radius: radius,
            g_radius: radius,
            r: radius,
            min_r: 0.0,
        }
    }

    /// `‖(μ, G)‖` bound over the stacked set, `√(Λ² + Γ²)`.
    pub fn stacked_radius(&self) -> f64 {
        self.mu_radius.hypot(self.g_radius)
    }

    pub fn contains(&self, dual: &DualPoint) -> bool {
        let scale = 1.0 + 1e-12;
        dual.mu >= 0.0
            && dual.mu <= self.mu_radius * scale
            && dual.g.frobenius_norm() <= self.g_radius * scale
            && lambda_min(&dual.g).map(|l| l >= -super::EPS_PSD).unwrap_or(false)
    }
}

/// `(f(x̄) − q(probe))/γ`
pub fn min_admissible_r(instance: &ProblemInstance, slater: &SlaterCertificate, probe: &DualPoint) -> Result<f64> {
    let q = dual_value(instance, probe, ORACLE_TOL)?;
    Ok((slater.fxbar - q) / slater.gamma)
}

/// Builds `D_μ`, `D_G` with `Λ = Γ = (f(x̄) − q(probe))/γ + r`.
pub fn build_dual_sets(
    instance: &ProblemInstance,
    slater: &SlaterCertificate,
    probe: &DualPoint,
    r: f64,
) -> Result<DualSetSpec> {
    let min_r = min_admissible_r(instance, slater, probe)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Config(format!("r must be positive and finite, got {r}")));
    }
    if r < min_r {
        return Err(Error::RadiusTooSmall { given: r, minimum: min_r });
    }
    let radius = min_r + r;
    Ok(DualSetSpec {
        mu_radius: radius,
        g_radius: radius,
        r,
        min_r,
    })
}
