//! Built-in instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{NodeSpec, ProblemInstance, ScalarFunction};
use crate::matrix::SymMatrix;

/// Right-hand side of the resource constraint `Σ σᵢ xᵢ ≤ 10`.
pub const NUM_BUDGET: f64 = 10.0;

/// Network-utility instance: `−Σ σᵢ xᵢ` over the first `⌊n/3⌋` nodes,
/// `−Σ σᵢ log(1+xᵢ)` over the rest, subject to `Σ σᵢ xᵢ ≤ 10`, `xᵢ ∈ [0, 1]`.
///
/// The budget is split evenly so each node carries `gᵢ(x) = σᵢ x − 10/n`.
pub fn make_sample_num_instance(n: usize, seed: u64) -> ProblemInstance {
    make_num_instance_with_budget(n, seed, NUM_BUDGET)
}

pub fn make_num_instance_with_budget(n: usize, seed: u64, budget: f64) -> ProblemInstance {
    assert!(n >= 1, "instance needs at least one node");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let linear = n / 3;
    let share = budget / n as f64;
    let nodes = (0..n)
        .map(|i| {
            let sigma: f64 = rng.gen();
            let f = if i < linear {
                ScalarFunction::linear(-sigma)
            } else {
                ScalarFunction::neg_log(sigma)
            };
            NodeSpec::new(f, ScalarFunction::affine(sigma, -share), SymMatrix::zeros(0), 0.0, 1.0)
                .expect("sample node is well formed")
        })
        .collect();
    ProblemInstance::new(nodes, SymMatrix::zeros(0))
        .expect("sample instance is well formed")
        .with_name(format!("num-{n}"))
        .with_seed(seed)
}

/// Two-node instance with a 2×2 LMI, strictly feasible at the origin:
/// `fᵢ = x`, `gᵢ = x − 1`, `A₀ = 1.5 I`, `A₁ = −e₁e₁ᵀ`, `A₂ = −e₂e₂ᵀ`.
pub fn make_sample_lmi_instance() -> ProblemInstance {
    let nodes = vec![
        NodeSpec::new(
            ScalarFunction::linear(1.0),
            ScalarFunction::affine(1.0, -1.0),
            SymMatrix::from_diag(&[-1.0, 0.0]),
            0.0,
            1.0,
        )
        .unwrap(),
        NodeSpec::new(
            ScalarFunction::linear(1.0),
            ScalarFunction::affine(1.0, -1.0),
            SymMatrix::from_diag(&[0.0, -1.0]),
            0.0,
            1.0,
        )
        .unwrap(),
    ];
    ProblemInstance::new(nodes, SymMatrix::from_diag(&[1.5, 1.5]))
        .unwrap()
        .with_name("lmi-tiny")
}

/// Two-node instance whose LMI is active at the optimum:
/// maximize `x₁ + x₂` subject to `[[1 − x₁, ½], [½, 1 − x₂]] ⪰ 0`.
///
/// The optimum is `x = (½, ½)` with `f* = −1`.
pub fn make_coupled_lmi_instance() -> ProblemInstance {
    let nodes = vec![
        NodeSpec::new(
            ScalarFunction::linear(-1.0),
            ScalarFunction::affine(1.0, -1.0),
            SymMatrix::from_diag(&[-1.0, 0.0]),
            0.0,
            1.0,
        )
        .unwrap(),
        NodeSpec::new(
            ScalarFunction::linear(-1.0),
            ScalarFunction::affine(1.0, -1.0),
            SymMatrix::from_diag(&[0.0, -1.0]),
            0.0,
            1.0,
        )
        .unwrap(),
    ];
    let a0 = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
    ProblemInstance::new(nodes, a0).unwrap().with_name("lmi-coupled")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn num_instance_layout() {
        let inst = make_sample_num_instance(100, 42);
        let linear = inst
            .nodes()
            .iter()
            .filter(|n| matches!(n.f, ScalarFunction::Linear { .. }))
            .count();
        assert_eq!(linear, 33);
        assert_eq!(inst.n() - linear, 67);
        assert_eq!(inst.d(), 0);
    }

    #[test]
    fn num_instance_is_seeded() {
        let a = make_sample_num_instance(100, 42).to_json().unwrap();
        let b = make_sample_num_instance(100, 42).to_json().unwrap();
        let c = make_sample_num_instance(100, 43).to_json().unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn budget_split_reproduces_coupling_constraint() {
        let inst = make_sample_num_instance(100, 42);
        let sigmas: Vec<f64> = inst
            .nodes()
            .iter()
            .map(|n| match n.g {
                ScalarFunction::Affine { a, .. } => a,
                _ => unreachable!(),
            })
            .collect();
        for x in [0.0, 0.37, 1.0] {
            let xs = vec![x; 100];
            let direct: f64 = sigmas.iter().map(|s| s * x).sum::<f64>() - NUM_BUDGET;
            assert!((inst.constraint_value(&xs) - direct).abs() < 1e-12);
        }
        assert!(sigmas.iter().all(|s| (0.0..1.0).contains(s)));
    }

    #[test]
    fn num_objective_at_all_ones() {
        let inst = make_sample_num_instance(100, 42);
        let mut expect = 0.0;
        for (i, node) in inst.nodes().iter().enumerate() {
            let sigma = match node.g {
                ScalarFunction::Affine { a, .. } => a,
                _ => unreachable!(),
            };
            expect -= if i < 33 { sigma } else { sigma * 2f64.ln() };
        }
        let ev = inst.evaluate_primal(&[1.0; 100]).unwrap();
        assert!((ev.f - expect).abs() < 1e-12);
        assert!(inst.evaluate_primal(&[0.0; 100]).unwrap().violation_ineq == 0.0);
        assert!((inst.constraint_value(&[0.0; 100]) + 10.0).abs() < 1e-12);
    }

    #[test]
    fn lmi_instance_facts() {
        let inst = make_sample_lmi_instance();
        let at_zero = inst.evaluate_primal(&[0.0, 0.0]).unwrap();
        assert!((at_zero.lmi_lambda_min - 1.5).abs() < 1e-15);
        let at_one = inst.evaluate_primal(&[1.0, 1.0]).unwrap();
        assert!((at_one.lmi_lambda_min - 0.5).abs() < 1e-15);
        assert_eq!(at_one.violation_lmi, 0.0);
    }

    #[test]
    fn coupled_lmi_is_tight_at_half() {
        let inst = make_coupled_lmi_instance();
        let ev = inst.evaluate_primal(&[0.5, 0.5]).unwrap();
        assert!(ev.lmi_lambda_min.abs() < 1e-15);
        assert!(inst.evaluate_primal(&[0.6, 0.6]).unwrap().violation_lmi > 0.0);
    }
}
