//! Closed-form convergence bounds for both solvers.
//!
//! All primal bounds are expressed as bounds on the gap `f(xᵏ) − f*`, so
//! they can be computed without knowing `f*`.

use serde::{Deserialize, Serialize};

use crate::consensus::min_consensus_steps;
use crate::error::{Error, Result};
use crate::problem::{DualSetSpec, SubgradientBounds};

/// Inputs that fully determine [`TheoreticalBounds`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    pub phi: usize,
    pub nu: f64,
    pub beta0: f64,
    pub m: f64,
    pub mu_radius: f64,
    pub g_radius: f64,
}

/// Agreement, dual and primal bound constants for one consensus run.
///
/// Quantities that depend on `δ = φ − ⌈φ̄⌉` are `None` when `φ < φ̄`, since
/// the agreement results only hold above the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalBounds {
    pub inputs: BoundInputs,
    pub phibar: f64,
    pub phibar_simplified: f64,
    pub applicable: bool,
    pub delta: Option<usize>,
    pub p: Option<f64>,
    pub beta0: f64,
    /// `beta_k[0] = β₀`, `beta_k[k] = β_k` for `k ≥ 1`.
    pub beta_k: Option<Vec<f64>>,
    pub beta_inf: Option<f64>,
    pub tau: f64,
    pub zeta: f64,
    /// `epsilon_k[k] = ε_k` for `k ≥ 1`; `epsilon_k[0]` is unused (NaN).
    pub epsilon_k: Option<Vec<f64>>,
    pub e_k: f64,
    pub dual_gap_floor: Option<f64>,
    /// `dual_gap_floor` evaluated at `δ = 0` whether or not `φ ≥ φ̄`.
    pub dual_gap_floor_nominal: f64,
}

fn contraction(nu: f64, delta: usize, beta0: f64, alpha_m: f64) -> f64 {
    let denom = beta0 + alpha_m;
    if denom == 0.0 {
        return 0.0;
    }
    nu.powi(delta as i32) * beta0 / denom
}

fn geometric(p: f64, terms: usize) -> f64 {
    // (1 − pᵗ)/(1 − p)
    if (1.0 - p).abs() < 1e-15 {
        terms as f64
    } else {
        (1.0 - p.powi(terms as i32)) / (1.0 - p)
    }
}

/// `β_k = p^{k−1} ν^δ β₀ + p α M (1 − p^{k−1})/(1 − p)`, `k ≥ 1`.
pub fn beta_at(k: usize, p: f64, nu_delta: f64, beta0: f64, alpha_m: f64) -> f64 {
    assert!(k >= 1);
    p.powi((k - 1) as i32) * nu_delta * beta0 + p * alpha_m * geometric(p, k - 1)
}

/// `β∞ = p α M/(1 − p)`
pub fn beta_limit(p: f64, alpha_m: f64) -> f64 {
    if alpha_m == 0.0 {
        0.0
    } else {
        p * alpha_m / (1.0 - p)
    }
}

/// Dual floor `α n (M+τ)²/2 + n(β∞(9M + 3τ) + ζ)`.
pub fn dual_gap_floor(alpha: f64, n: usize, m: f64, tau: f64, zeta: f64, beta_inf: f64) -> f64 {
    let n = n as f64;
    alpha * n * (m + tau).powi(2) / 2.0 + n * (beta_inf * (9.0 * m + 3.0 * tau) + zeta)
}

/// Computes every bound constant for a consensus run of `k_max` iterations.
pub fn theoretical_bounds(
    n: usize,
    d: usize,
    sets: &DualSetSpec,
    nu: f64,
    alpha: f64,
    phi: usize,
    subgrad: &SubgradientBounds,
    beta0: f64,
    k_max: usize,
) -> Result<TheoreticalBounds> {
    if nu >= 1.0 {
        return Err(Error::SpectralGap(nu));
    }
    if !(alpha > 0.0) || phi == 0 {
        return Err(Error::Config("alpha must be positive and phi at least 1".into()));
    }
    let m = subgrad.m;
    let alpha_m = alpha * m;
    let step = min_consensus_steps(beta0, alpha, m, n, d, nu)?;
    let applicable = step.phibar.is_finite() && phi as f64 >= step.phibar;
    let nf = n as f64;
    let (lam, gam) = (sets.mu_radius, sets.g_radius);

    let tau = beta0 / alpha;
    let zeta = 2.0 * tau * lam.hypot(gam);
    let e_k = alpha * nf * (m + tau).powi(2) / 2.0
        + nf * tau * (lam + gam)
        + nf * (beta0 * (6.0 * m + 3.0 * tau) + zeta);

    let p0 = contraction(nu, 0, beta0, alpha_m);
    let dual_gap_floor_nominal = dual_gap_floor(alpha, n, m, tau, zeta, beta_limit(p0, alpha_m));

    let mut out = TheoreticalBounds {
        inputs: BoundInputs {
            n,
            d,
            alpha,
            phi,
            nu,
            beta0,
            m,
            mu_radius: lam,
            g_radius: gam,
        },
        phibar: step.phibar,
        phibar_simplified: step.simplified,
        applicable,
        delta: None,
        p: None,
        beta0,
        beta_k: None,
        beta_inf: None,
        tau,
        zeta,
        epsilon_k: None,
        e_k,
        dual_gap_floor: None,
        dual_gap_floor_nominal,
    };
    if applicable {
        let delta = phi - step.phibar.ceil().max(0.0) as usize;
        let nu_delta = nu.powi(delta as i32);
        let p = contraction(nu, delta, beta0, alpha_m);
        let mut beta = Vec::with_capacity(k_max + 1);
        beta.push(beta0);
        for k in 1..=k_max {
            beta.push(beta_at(k, p, nu_delta, beta0, alpha_m));
        }
        let mut eps = vec![f64::NAN];
        for k in 1..=k_max {
            eps.push(nf * (beta[k - 1] * (6.0 * m + 3.0 * tau) + zeta));
        }
        let beta_inf = beta_limit(p, alpha_m);
        out.delta = Some(delta);
        out.p = Some(p);
        out.beta_k = Some(beta);
        out.beta_inf = Some(beta_inf);
        out.epsilon_k = Some(eps);
        out.dual_gap_floor = Some(dual_gap_floor(alpha, n, m, tau, zeta, beta_inf));
    }
    Ok(out)
}

impl TheoreticalBounds {
    fn radius_term(&self, k: usize) -> f64 {
        let i = &self.inputs;
        (i.mu_radius.powi(2) + i.g_radius.powi(2)) * i.n as f64 / (2.0 * k as f64 * i.alpha)
    }

    /// Upper bound on `f(xᵏ) − f*`.
    pub fn primal_upper_gap(&self, k: usize) -> f64 {
        self.radius_term(k) + self.e_k
    }

    /// Lower bound on `f(xᵏ) − f*` (a negative number).
    pub fn primal_lower_gap(&self, k: usize) -> f64 {
        -9.0 * self.radius_term(k) - self.e_k
    }

    /// Bound on `maxᵢ ‖μᵢᵏ − μ̄ᵏ‖` (and separately on the `G` part) at
    /// iteration `k ≥ 1`: `2β_{k−1}`.
    pub fn agreement_bound(&self, k: usize) -> Option<f64> {
        let beta = self.beta_k.as_ref()?;
        beta.get(k.checked_sub(1)?).map(|b| 2.0 * b)
    }

    /// Limit of [`agreement_bound`](Self::agreement_bound): `2β∞`.
    pub fn agreement_limit(&self) -> Option<f64> {
        self.beta_inf.map(|b| 2.0 * b)
    }

    pub fn beta(&self, k: usize) -> Option<f64> {
        self.beta_k.as_ref().and_then(|b| b.get(k).copied())
    }
}

/// Bounds for the centralized iteration with realized dual maxima.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralBounds {
    pub alpha: f64,
    pub n: usize,
    pub l: f64,
    pub q: f64,
    pub lambda0: f64,
    pub gamma0: f64,
}

impl CentralBounds {
    /// `(Λ₀² + Γ₀²)/(2αk) + α n² (L² + Q²)/2`
    pub fn upper_gap(&self, k: usize) -> f64 {
        let nf = self.n as f64;
        (self.lambda0.powi(2) + self.gamma0.powi(2)) / (2.0 * self.alpha * k as f64)
            + self.alpha * nf * nf * (self.l.powi(2) + self.q.powi(2)) / 2.0
    }

    /// `−(Λ₀² + Γ₀²)/(αk)`
    pub fn lower_gap(&self, k: usize) -> f64 {
        -(self.lambda0.powi(2) + self.gamma0.powi(2)) / (self.alpha * k as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub(m: f64) -> SubgradientBounds {
        SubgradientBounds::new(m, 0.0)
    }

    #[test]
    fn infinite_consensus_limit() {
        // ν = 0, β₀ = 0: perfect agreement, e_k = α n M²/2
        let sets = DualSetSpec::with_radius(3.0);
        let b = theoretical_bounds(10, 0, &sets, 0.0, 0.5, 1, &sub(2.0), 0.0, 20).unwrap();
        assert!(b.applicable);
        assert_eq!(b.p, Some(0.0));
        assert_eq!(b.beta_inf, Some(0.0));
        assert!((b.e_k - 0.5 * 10.0 * 4.0 / 2.0).abs() < 1e-12);
        assert!(b.beta_k.as_ref().unwrap()[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_contraction_kills_disagreement() {
        let sets = DualSetSpec::with_radius(1.0);
        let b = theoretical_bounds(5, 0, &sets, 0.0, 1.0, 3, &sub(1.0), 10.0, 5).unwrap();
        assert_eq!(b.p, Some(0.0));
        let beta = b.beta_k.unwrap();
        assert_eq!(beta[0], 10.0);
        // β_1 = ν^δ β₀ = 0 with ν = 0
        assert!(beta[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn formulas_match_direct_evaluation() {
        let sets = DualSetSpec::with_radius(2.0);
        let (n, alpha, m, nu, beta0) = (20usize, 0.1f64, 3.0f64, 0.5f64, 30.0f64);
        let phibar = (beta0.ln() - (4.0 * 20.0 * (beta0 + alpha * m)).ln()) / nu.ln();
        let phi = phibar.ceil() as usize + 2;
        let b = theoretical_bounds(n, 0, &sets, nu, alpha, phi, &sub(m), beta0, 50).unwrap();
        assert!((b.phibar - phibar).abs() < 1e-12);
        assert_eq!(b.delta, Some(2));
        let p = 0.25 * beta0 / (beta0 + alpha * m);
        assert!((b.p.unwrap() - p).abs() < 1e-15);
        let beta = b.beta_k.as_ref().unwrap();
        for k in 1..=50usize {
            let direct = p.powi(k as i32 - 1) * 0.25 * beta0 + p * alpha * m * (1.0 - p.powi(k as i32 - 1)) / (1.0 - p);
            assert!((beta[k] - direct).abs() < 1e-12 * direct.max(1.0));
        }
        let tau = beta0 / alpha;
        let zeta = 2.0 * tau * (8.0f64).sqrt();
        let nf = n as f64;
        let e = alpha * nf * (m + tau).powi(2) / 2.0 + nf * tau * 4.0 + nf * (beta0 * (6.0 * m + 3.0 * tau) + zeta);
        assert!((b.e_k - e).abs() < 1e-9 * e);
        let binf = p * alpha * m / (1.0 - p);
        let floor = alpha * nf * (m + tau).powi(2) / 2.0 + nf * (binf * (9.0 * m + 3.0 * tau) + zeta);
        assert!((b.dual_gap_floor.unwrap() - floor).abs() < 1e-9 * floor);
        let eps = b.epsilon_k.as_ref().unwrap();
        assert!((eps[1] - nf * (beta0 * (6.0 * m + 3.0 * tau) + zeta)).abs() < 1e-9 * eps[1]);
        // β_k tends to β∞
        assert!((beta[50] - binf).abs() < 1e-12);
    }

    #[test]
    fn below_threshold_is_flagged() {
        let sets = DualSetSpec::with_radius(2.0);
        let b = theoretical_bounds(100, 0, &sets, 0.95, 1.0, 1, &sub(1.0), 10.0, 10).unwrap();
        assert!(!b.applicable);
        assert!(b.beta_k.is_none() && b.dual_gap_floor.is_none() && b.p.is_none());
        assert!(b.e_k.is_finite() && b.dual_gap_floor_nominal.is_finite());
        assert!(b.agreement_bound(3).is_none());
    }

    #[test]
    fn spectral_gap_required() {
        let sets = DualSetSpec::with_radius(1.0);
        assert!(matches!(
            theoretical_bounds(3, 0, &sets, 1.0, 1.0, 1, &sub(1.0), 1.0, 1),
            Err(Error::SpectralGap(_))
        ));
    }

    #[test]
    fn central_bound_shapes() {
        let c = CentralBounds {
            alpha: 0.5,
            n: 4,
            l: 1.0,
            q: 0.0,
            lambda0: 2.0,
            gamma0: 0.0,
        };
        assert!((c.upper_gap(2) - (4.0 / 2.0 + 0.5 * 16.0 / 2.0)).abs() < 1e-15);
        assert!((c.lower_gap(2) + 4.0).abs() < 1e-15);
    }
}
