mod common;

use common::*;
use compadmm_core::linalg::spectral_bounds;
use compadmm_core::linalg::Matrix;
use compadmm_core::problems::{gen_synthetic_quadratic, policy_eval_problem, portfolio_problem, simulate_policy_eval, PolicyEvalSpec, QuadraticSpec};
use compadmm_core::reference::{estimate_smoothness, kkt_residual, reference_solve, ReferenceOptions};
use compadmm_core::{OracleLedger, Regularizer};
use nalgebra::{DMatrix, DVector};

#[test]
fn toy_portfolio_optimum() {
    let returns = Matrix::from_rows(&[vec![1.0], vec![3.0]]);
    let (p, mut c) = portfolio_problem(returns, 0.0).unwrap();
    c.regularizer = Regularizer::None;
    let sol = reference_solve(&p, &c, &ReferenceOptions::default()).unwrap();
    assert!(sol.converged);
    assert!((sol.x[0] - 1.0).abs() <= 1e-8, "{:?}", sol.x);
    assert!((sol.objective + 1.0).abs() <= 1e-8);
}

#[test]
fn zero_discount_policy_matches_normal_equations() {
    let spec = PolicyEvalSpec {
        n_states: 10,
        dim: 4,
        gamma: 0.0,
        mu_r: 0.1,
        seed: 3,
    };
    let oracle = simulate_policy_eval(&spec).unwrap();
    let (s, d) = (10, 4);
    let phi = DMatrix::from_fn(s, d, |i, k| oracle.features()[(i, k)]);
    let target = DVector::from_fn(s, |i, _| {
        (0..s).map(|sp| oracle.transition()[sp] * oracle.rewards()[(i, sp)]).sum::<f64>()
    });
    // (2/S)ΦᵀΦw + μw = (2/S)Φᵀt
    let lhs = phi.transpose() * &phi * (2.0 / s as f64) + DMatrix::identity(d, d) * 0.1;
    let rhs = phi.transpose() * target * (2.0 / s as f64);
    let w = lhs.lu().solve(&rhs).unwrap();
    let (p, c) = policy_eval_problem(oracle, 0.1).unwrap();
    let sol = reference_solve(&p, &c, &ReferenceOptions::default()).unwrap();
    assert!(sol.converged);
    assert_close(&sol.x, w.as_slice(), 1e-6);
}

#[test]
fn quadratic_reference_agrees_with_stored_optimum() {
    let inst = gen_synthetic_quadratic(&QuadraticSpec::new(20, 5, 10.0, 7)).unwrap();
    let sol = reference_solve(&inst.problem, &inst.constraint, &ReferenceOptions::default()).unwrap();
    assert!(sol.converged);
    assert_close(&sol.x, &inst.optimum.x, 1e-8);
    assert!((sol.objective - inst.optimum.objective).abs() <= 1e-10 * (1.0 + inst.optimum.objective.abs()));
}

#[test]
fn kkt_residual_vanishes_at_stored_optimum() {
    let inst = gen_synthetic_quadratic(&QuadraticSpec::new(12, 4, 5.0, 2)).unwrap();
    let opt = &inst.optimum;
    let mut l = OracleLedger::new();
    let g = inst.problem.full_gradient(&opt.x, &mut l).unwrap();
    assert!(kkt_residual(&inst.constraint, &g, &opt.x, &opt.omega, &opt.lambda).unwrap() <= 1e-9);
    let zeros = vec![0.0; 4];
    assert!(kkt_residual(&inst.constraint, &g, &opt.x, &opt.omega, &zeros).unwrap() > 1e-3);
}

#[test]
fn smoothness_estimate_matches_hessian_norm() {
    let inst = gen_synthetic_quadratic(&QuadraticSpec::new(12, 4, 5.0, 2)).unwrap();
    let (hi, _) = spectral_bounds(&inst.hessian).unwrap();
    let est = estimate_smoothness(&inst.problem, &vec![0.1; 12], 200).unwrap();
    assert!((est - hi).abs() <= 1e-4 * hi, "{est} vs {hi}");
}

#[test]
fn budget_exhaustion_is_reported() {
    let inst = gen_synthetic_quadratic(&QuadraticSpec::new(12, 4, 5.0, 2)).unwrap();
    let opts = ReferenceOptions {
        max_iterations: 3,
        ..Default::default()
    };
    let sol = reference_solve(&inst.problem, &inst.constraint, &opts).unwrap();
    assert!(!sol.converged);
    assert!(sol.residual > opts.tolerance);
}
