//! High-accuracy reference solutions for gap computation.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::vector::{axpy, norm, scale};
use crate::problem::{CompositionProblem, ConstraintSpec, OracleLedger};
use crate::solver::{update_dual, OmegaSolver, ReferenceSolution, XSolver};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    /// Target first-order (KKT) residual.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Penalty; defaults to the estimated smoothness constant.
    pub rho: Option<f64>,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 100_000,
            rho: None,
        }
    }
}

/// Largest eigenvalue of the Hessian of F at `x`, by power iteration on
/// central-difference Hessian-vector products.
pub fn estimate_smoothness(problem: &CompositionProblem, x: &[f64], iterations: usize) -> Result<f64> {
    let q = problem.dim_x();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..q).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = norm(&v);
    scale(1.0 / nv, &mut v);
    let mut scratch = OracleLedger::new();
    let h = 1e-4 * (1.0 + norm(x));
    let mut estimate = 0.0;
    for _ in 0..iterations.max(1) {
        let mut plus = x.to_vec();
        axpy(h, &v, &mut plus);
        let mut minus = x.to_vec();
        axpy(-h, &v, &mut minus);
        let gp = problem.full_gradient(&plus, &mut scratch)?;
        let gm = problem.full_gradient(&minus, &mut scratch)?;
        let mut hv: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let nh = norm(&hv);
        if !(nh > 0.0 && nh.is_finite()) {
            break;
        }
        estimate = nh;
        scale(1.0 / nh, &mut hv);
        v = hv;
    }
    Ok(estimate)
}

/// KKT residual `max(‖∇F(x) + Aᵀλ‖, ‖Ax + Bω‖, dist(−Bᵀλ, ∂R(ω)))`,
/// given `∇F(x)`.
pub fn kkt_residual(constraint: &ConstraintSpec, grad: &[f64], x: &[f64], omega: &[f64], lambda: &[f64]) -> Result<f64> {
    let mut stationarity = grad.to_vec();
    constraint.a.tr_mul_vec_acc(1.0, lambda, &mut stationarity);
    let feas = constraint.feasibility(x, omega)?;
    let neg_bt: Vec<f64> = constraint.b.tr_mul_vec(lambda).iter().map(|v| -v).collect();
    let omega_res = constraint
        .regularizer
        .subgradient_residual(omega, &neg_bt)
        .unwrap_or(0.0);
    Ok(norm(&stationarity).max(feas).max(omega_res))
}

/// Deterministic linearized ADMM with exact gradients, run until the KKT
/// residual reaches `options.tolerance` or the iteration budget runs out.
/// A run that stops early is returned with `converged = false`.
pub fn reference_solve(
    problem: &CompositionProblem,
    constraint: &ConstraintSpec,
    options: &ReferenceOptions,
) -> Result<ReferenceSolution> {
    constraint.check_problem(problem)?;
    let (q, l, p) = (problem.dim_x(), constraint.dim_omega(), constraint.rows());
    let mut x = alloc::vec![0.0; q];
    let l_est = estimate_smoothness(problem, &x, 50)?;
    let lipschitz = (1.05 * l_est).max(1e-8);
    let eta = 1.0 / lipschitz;
    let rho = options.rho.unwrap_or(lipschitz);
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::Config("reference penalty must be > 0".into()));
    }
    let omega_solver = OmegaSolver::new(constraint, rho)?;
    let mut x_solver = XSolver::new(constraint);
    let mut omega = alloc::vec![0.0; l];
    let mut lambda = alloc::vec![0.0; p];
    let mut scratch = OracleLedger::new();

    let mut residual = f64::INFINITY;
    for _ in 0..options.max_iterations {
        let omega_next = omega_solver.solve(constraint, &x, &lambda)?;
        let grad = problem.full_gradient(&x, &mut scratch)?;
        residual = kkt_residual(constraint, &grad, &x, &omega, &lambda)?;
        if residual <= options.tolerance {
            break;
        }
        let x_next = x_solver.solve(constraint, rho, &x, &lambda, &omega_next, &grad, eta)?;
        lambda = update_dual(rho, &lambda, &constraint.a, &constraint.b, &x_next, &omega_next)?;
        x = x_next;
        omega = omega_next;
        if !(norm(&x).is_finite() && norm(&lambda).is_finite()) {
            return Err(Error::NonFinite("reference iterate"));
        }
    }
    if residual > options.tolerance {
        let grad = problem.full_gradient(&x, &mut scratch)?;
        residual = kkt_residual(constraint, &grad, &x, &omega, &lambda)?;
    }
    let objective = problem.value(&x, &mut scratch)? + constraint.regularizer.value(&omega);
    Ok(ReferenceSolution {
        x,
        omega,
        lambda,
        objective,
        residual,
        converged: residual <= options.tolerance,
    })
}
