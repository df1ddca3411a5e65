use proptest::prelude::*;

use cobadd::bounds::theoretical_bounds;
use cobadd::matrix::SymMatrix;
use cobadd::problem::{
    dual_value, local_solutions, make_coupled_lmi_instance, make_sample_num_instance, subgradient_bounds, DualPoint,
    DualSetSpec, ProblemInstance, ORACLE_TOL,
};
use cobadd::spectral::project_psd;

fn psd2(a: f64, b: f64, c: f64) -> SymMatrix {
    let raw = SymMatrix::from_rows(&[vec![a, b], vec![b, c]]).unwrap();
    project_psd(&raw).unwrap()
}

fn lmi_dual(mu: f64, a: f64, b: f64, c: f64) -> DualPoint {
    DualPoint {
        mu,
        g: psd2(a, b, c),
    }
}

fn num_dual(mu: f64) -> DualPoint {
    DualPoint::new(mu, SymMatrix::zeros(0)).unwrap()
}

/// `(Σ gᵢ(x̃ᵢ), −(A₀ + Σ Aᵢ x̃ᵢ))`, a supergradient of `q` at `y`.
fn supergradient(inst: &ProblemInstance, y: &DualPoint) -> (f64, SymMatrix) {
    let x: Vec<f64> = local_solutions(inst, y, ORACLE_TOL).unwrap().iter().map(|s| s.x).collect();
    (inst.constraint_value(&x), inst.lmi_matrix(&x).scaled(-1.0))
}

fn q(inst: &ProblemInstance, y: &DualPoint) -> f64 {
    dual_value(inst, y, ORACLE_TOL).unwrap()
}

fn midpoint(a: &DualPoint, b: &DualPoint) -> DualPoint {
    DualPoint {
        mu: 0.5 * (a.mu + b.mu),
        g: a.g.scaled(0.5).add_scaled(0.5, &b.g),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_is_concave_num(seed in 0u64..50, m1 in 0.0..5.0f64, m2 in 0.0..5.0f64) {
        let inst = make_sample_num_instance(15, seed);
        let (a, b) = (num_dual(m1), num_dual(m2));
        prop_assert!(q(&inst, &midpoint(&a, &b)) >= 0.5 * (q(&inst, &a) + q(&inst, &b)) - 1e-9);
    }

    #[test]
    fn dual_is_concave_lmi(
        m1 in 0.0..4.0f64, a1 in -2.0..2.0f64, b1 in -2.0..2.0f64, c1 in -2.0..2.0f64,
        m2 in 0.0..4.0f64, a2 in -2.0..2.0f64, b2 in -2.0..2.0f64, c2 in -2.0..2.0f64,
    ) {
        let inst = make_coupled_lmi_instance();
        let (y1, y2) = (lmi_dual(m1, a1, b1, c1), lmi_dual(m2, a2, b2, c2));
        prop_assert!(q(&inst, &midpoint(&y1, &y2)) >= 0.5 * (q(&inst, &y1) + q(&inst, &y2)) - 1e-9);
    }

    #[test]
    fn supergradient_inequality(
        m1 in 0.0..4.0f64, a1 in -2.0..2.0f64, b1 in -2.0..2.0f64, c1 in -2.0..2.0f64,
        m2 in 0.0..4.0f64, a2 in -2.0..2.0f64, b2 in -2.0..2.0f64, c2 in -2.0..2.0f64,
    ) {
        let inst = make_coupled_lmi_instance();
        let (y1, y2) = (lmi_dual(m1, a1, b1, c1), lmi_dual(m2, a2, b2, c2));
        let (sm, sg) = supergradient(&inst, &y1);
        let linear = q(&inst, &y1) + sm * (y2.mu - y1.mu) + sg.trace_dot(&y2.g.sub(&y1.g));
        prop_assert!(q(&inst, &y2) <= linear + 1e-9);
    }

    #[test]
    fn dual_is_lipschitz(seed in 0u64..50, m1 in 0.0..5.0f64, m2 in 0.0..5.0f64) {
        let inst = make_sample_num_instance(15, seed);
        let sb = subgradient_bounds(&inst, 101).unwrap();
        let (a, b) = (num_dual(m1), num_dual(m2));
        let lhs = (q(&inst, &a) - q(&inst, &b)).abs();
        prop_assert!(lhs <= inst.n() as f64 * sb.m * a.distance(&b) + 1e-12);
    }

    #[test]
    fn weak_duality_at_feasible_points(
        seed in 0u64..50, mu in 0.0..5.0f64, xs in proptest::collection::vec(0.0..1.0f64, 15),
    ) {
        let inst = make_sample_num_instance(15, seed);
        let g = inst.constraint_value(&xs);
        // shrink toward the origin (strictly feasible) until Σ g ≤ 0
        let base = inst.constraint_value(&[0.0; 15]);
        let t = if g <= 0.0 { 1.0 } else { base / (base - g) };
        let x: Vec<f64> = xs.iter().map(|v| v * t).collect();
        prop_assert!(inst.constraint_value(&x) <= 1e-12);
        prop_assert!(q(&inst, &num_dual(mu)) <= inst.objective(&x) + 1e-9);
    }

    #[test]
    fn weak_duality_lmi(
        m in 0.0..4.0f64, a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64,
        x1 in 0.0..0.5f64, x2 in 0.0..0.5f64,
    ) {
        // x ∈ [0, ½]² keeps [[1 − x₁, ½], [½, 1 − x₂]] PSD
        let inst = make_coupled_lmi_instance();
        let x = [x1, x2];
        prop_assert!(inst.evaluate_primal(&x).unwrap().violation_lmi == 0.0);
        prop_assert!(q(&inst, &lmi_dual(m, a, b, c)) <= inst.objective(&x) + 1e-9);
    }

    #[test]
    fn local_minimizer_beats_box_points(
        seed in 0u64..50, mu in 0.0..5.0f64, probes in proptest::collection::vec(0.0..1.0f64, 20),
    ) {
        let inst = make_sample_num_instance(9, seed);
        let y = num_dual(mu);
        let sols = local_solutions(&inst, &y, ORACLE_TOL).unwrap();
        for (node, sol) in inst.nodes().iter().zip(&sols) {
            for &x in &probes {
                let l = node.f.eval(x) + mu * node.g.eval(x);
                prop_assert!(sol.q <= l + 1e-9);
            }
        }
    }

    #[test]
    fn beta_sequence_recurrence(
        nu in 0.05..0.95f64, beta0 in 0.1..50.0f64, alpha in 0.01..2.0f64, m in 0.1..3.0f64, extra in 0usize..4,
    ) {
        let sets = DualSetSpec::with_radius(2.0);
        let sb = cobadd::problem::SubgradientBounds::new(m, 0.0);
        let phibar = (beta0.ln() - (20.0 * (beta0 + alpha * m)).ln()) / nu.ln();
        let phi = phibar.ceil().max(1.0) as usize + extra;
        let b = theoretical_bounds(5, 0, &sets, nu, alpha, phi, &sb, beta0, 40).unwrap();
        prop_assert!(b.applicable);
        let p = b.p.unwrap();
        let beta = b.beta_k.as_ref().unwrap();
        // β_{k+1} = p β_k + p α M and β_k → β∞
        for k in 1..40 {
            let next = p * beta[k] + p * alpha * m;
            prop_assert!((beta[k + 1] - next).abs() <= 1e-10 * next.max(1.0));
        }
        prop_assert!((beta[40] - b.beta_inf.unwrap()).abs() <= (beta[1] - b.beta_inf.unwrap()).abs() + 1e-12);
    }
}
