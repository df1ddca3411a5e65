//! Symmetric eigendecomposition and the Euclidean projections onto the
//! compact dual sets.

use crate::error::{Error, Result};
use crate::matrix::{SymMatrix, SYMMETRY_TOL};

const MAX_SWEEPS: usize = 64;
const OFF_DIAG_TOL: f64 = 1e-15;

/// Spectral decomposition `A = V diag(λ) Vᵀ` with eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub eigenvalues: Vec<f64>,
    /// Row-major `dim × dim`; column `j` is the eigenvector of `eigenvalues[j]`.
    pub eigenvectors: Vec<f64>,
    dim: usize,
}

impl SymEig {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector_entry(&self, row: usize, col: usize) -> f64 {
        self.eigenvectors[row * self.dim + col]
    }

    /// `V diag(values) Vᵀ` for an arbitrary replacement spectrum.
    pub fn assemble(&self, values: &[f64]) -> SymMatrix {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for (k, &lam) in values.iter().enumerate() {
                    if lam != 0.0 {
                        acc += self.vector_entry(i, k) * lam * self.vector_entry(j, k);
                    }
                }
                out[i * n + j] = acc;
                out[j * n + i] = acc;
            }
        }
        SymMatrix::from_raw(n, out)
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.assemble(&self.eigenvalues)
    }

    /// `‖VᵀV − I‖_F`
    pub fn orthogonality_error(&self) -> f64 {
        let n = self.dim;
        let mut err = 0.0;
        for a in 0..n {
            for b in 0..n {
                let dot: f64 = (0..n)
                    .map(|r| self.vector_entry(r, a) * self.vector_entry(r, b))
                    .sum();
                let target = if a == b { 1.0 } else { 0.0 };
                err += (dot - target) * (dot - target);
            }
        }
        err.sqrt()
    }
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Deterministic for identical input. Rejects input whose asymmetry
/// exceeds `1e-12 · max(1, ‖A‖_F)`.
pub fn sym_eig(a: &SymMatrix) -> Result<SymEig> {
    sym_eig_slice(a.dim(), a.as_slice())
}

/// Same as [`sym_eig`] for raw row-major storage.
pub fn sym_eig_slice(n: usize, data: &[f64]) -> Result<SymEig> {
    if data.len() != n * n {
        return Err(Error::Dimension {
            expected: n * n,
            got: data.len(),
        });
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::MalformedInstance("non-finite matrix entry".into()));
    }
    let norm = data.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((data[i * n + j] - data[j * n + i]).abs());
        }
    }
    if asym > SYMMETRY_TOL * norm.max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }

    let mut a = data.to_vec();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let threshold = OFF_DIAG_TOL * norm;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| 2.0 * a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- A J
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                // A <- Jᵀ A
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[x * n + x].total_cmp(&a[y * n + y]));
    let eigenvalues = order.iter().map(|&k| a[k * n + k]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (col, &k) in order.iter().enumerate() {
        for r in 0..n {
            eigenvectors[r * n + col] = v[r * n + k];
        }
    }
    Ok(SymEig {
        eigenvalues,
        eigenvectors,
        dim: n,
    })
}

/// Smallest eigenvalue; `+∞` for the empty matrix so that a missing LMI
/// never reports a violation.
pub fn lambda_min(a: &SymMatrix) -> Result<f64> {
    if a.dim() == 0 {
        return Ok(f64::INFINITY);
    }
    Ok(sym_eig(a)?.eigenvalues[0])
}

/// Euclidean projection onto `[0, lambda]`.
pub fn project_mu(v: f64, lambda: f64) -> f64 {
    v.clamp(0.0, lambda)
}

/// Euclidean projection onto `{G ⪰ 0, ‖G‖_F ≤ gamma}`.
///
/// The set is spectral, so the projection acts on the eigenvalue vector:
/// clip to the nonnegative orthant, then pull back into the ball of radius
/// `gamma`.
pub fn project_g(v: &SymMatrix, gamma: f64) -> Result<SymMatrix> {
    if v.dim() == 0 {
        return Ok(SymMatrix::zeros(0));
    }
    let eig = sym_eig(v)?;
    let mut lam: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let norm = lam.iter().map(|l| l * l).sum::<f64>().sqrt();
    if norm > gamma {
        let s = gamma / norm;
        lam.iter_mut().for_each(|l| *l *= s);
    }
    Ok(eig.assemble(&lam))
}

/// Projection onto the unbounded PSD cone.
pub fn project_psd(v: &SymMatrix) -> Result<SymMatrix> {
    project_g(v, f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym_from_upper(n: usize, upper: &[f64]) -> SymMatrix {
        let mut m = SymMatrix::zeros(n);
        let mut it = upper.iter();
        for i in 0..n {
            for j in i..n {
                m.set_sym(i, j, *it.next().unwrap());
            }
        }
        m
    }

    #[test]
    fn identity_eigenvalues() {
        let e = sym_eig(&SymMatrix::identity(2)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0]);
    }

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let e = sym_eig(&SymMatrix::from_diag(&[2.0, -1.0])).unwrap();
        assert_eq!(e.eigenvalues, vec![-1.0, 2.0]);
    }

    #[test]
    fn rejects_asymmetric_slice() {
        let err = sym_eig_slice(2, &[1.0, 1e-6, 0.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
    }

    #[test]
    fn known_two_by_two() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = sym_eig(&m).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn project_mu_cases() {
        assert_eq!(project_mu(-3.0, 5.0), 0.0);
        assert_eq!(project_mu(7.0, 5.0), 5.0);
        assert_eq!(project_mu(2.0, 5.0), 2.0);
    }

    #[test]
    fn project_g_clips_negative_part() {
        let p = project_g(&SymMatrix::from_diag(&[2.0, -1.0]), 10.0).unwrap();
        assert!(p.distance(&SymMatrix::from_diag(&[2.0, 0.0])) < 1e-15);
    }

    #[test]
    fn project_g_scales_into_ball() {
        let p = project_g(&SymMatrix::from_diag(&[3.0, 4.0]), 2.5).unwrap();
        assert!(p.distance(&SymMatrix::from_diag(&[1.5, 2.0])) < 1e-15);
    }

    #[test]
    fn empty_dimension_projection() {
        assert_eq!(project_g(&SymMatrix::zeros(0), 1.0).unwrap().dim(), 0);
        assert_eq!(lambda_min(&SymMatrix::zeros(0)).unwrap(), f64::INFINITY);
    }

    fn arb_sym(max_dim: usize) -> impl Strategy<Value = SymMatrix> {
        (1..=max_dim).prop_flat_map(|n| {
            prop::collection::vec(-10.0f64..10.0, n * (n + 1) / 2)
                .prop_map(move |u| sym_from_upper(n, &u))
        })
    }

    proptest! {
        #[test]
        fn reconstruction_and_orthogonality(a in arb_sym(6)) {
            let e = sym_eig(&a).unwrap();
            let rec = e.reconstruct();
            prop_assert!(rec.distance(&a) <= 1e-10 * a.frobenius_norm().max(1.0));
            prop_assert!(e.orthogonality_error() <= 1e-10);
            prop_assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn projection_is_feasible_idempotent_nonexpansive(
            a in arb_sym(4), seed in prop::collection::vec(-10.0f64..10.0, 10), gamma in 0.1f64..20.0
        ) {
            let n = a.dim();
            let b = sym_from_upper(n, &seed[..n * (n + 1) / 2]);
            let pa = project_g(&a, gamma).unwrap();
            let pb = project_g(&b, gamma).unwrap();
            prop_assert!(lambda_min(&pa).unwrap() >= -1e-9);
            prop_assert!(pa.frobenius_norm() <= gamma * (1.0 + 1e-12));
            let ppa = project_g(&pa, gamma).unwrap();
            prop_assert!(ppa.distance(&pa) <= 1e-10 * gamma.max(1.0));
            prop_assert!(pa.distance(&pb) <= a.distance(&b) + 1e-10);
            // any member of the set is no farther from P(a) than from a
            prop_assert!(pb.distance(&pa) <= pb.distance(&a) + 1e-9);
        }
    }
}
