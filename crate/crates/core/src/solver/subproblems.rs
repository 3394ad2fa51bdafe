//! Closed-form ADMM steps for the ω-, x- and λ-updates.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{check_finite, check_len, Error, Result};
use crate::linalg::vector::axpy;
use crate::linalg::{pseudoinverse, Cholesky, Matrix, SpdCache, PINV_DEFAULT_TOL};
use crate::problem::{soft_threshold, ConstraintSpec, Regularizer};

const ORTHOGONALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
enum OmegaKind {
    /// `(μI + ρBᵀB) ω = −Bᵀ(λ + ρAx)`
    Quadratic(Cholesky),
    /// `BᵀB = βI`, proximal step with parameter `1/(ρβ)`.
    Proximal { beta: f64 },
}

/// Exact minimizer of `R(ω) + ⟨λ, Bω⟩ + (ρ/2)‖Ax + Bω‖²`, with the
/// factorization (or the `BᵀB = βI` scale) computed once.
#[derive(Debug, Clone)]
pub struct OmegaSolver {
    rho: f64,
    kind: OmegaKind,
}

impl OmegaSolver {
    pub fn new(constraint: &ConstraintSpec, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::Precondition(format!("rho must be > 0, got {rho}")));
        }
        let btb = constraint.b.gram();
        let kind = match &constraint.regularizer {
            Regularizer::None | Regularizer::ScaledSquaredNorm { .. } => {
                let mu = match constraint.regularizer {
                    Regularizer::ScaledSquaredNorm { mu } => mu,
                    _ => 0.0,
                };
                let mut m = btb;
                m.scale(rho);
                for i in 0..m.rows() {
                    m[(i, i)] += mu;
                }
                let chol = Cholesky::factor(&m).map_err(|_| {
                    Error::Unsupported(
                        "omega-subproblem is singular: need mu_R > 0 or B with full column rank"
                            .into(),
                    )
                })?;
                OmegaKind::Quadratic(chol)
            }
            Regularizer::L1 { .. } | Regularizer::Custom(_) => {
                let beta = scalar_multiple_of_identity(&btb).ok_or_else(|| {
                    Error::Unsupported(
                        "proximal omega-update needs B^T B to be a positive multiple of I".into(),
                    )
                })?;
                OmegaKind::Proximal { beta }
            }
        };
        Ok(Self { rho, kind })
    }

    pub fn solve(&self, constraint: &ConstraintSpec, x_k: &[f64], lambda_k: &[f64]) -> Result<Vec<f64>> {
        check_len("x", constraint.dim_x(), x_k.len())?;
        check_len("lambda", constraint.rows(), lambda_k.len())?;
        // −Bᵀ(λ + ρAx)
        let mut shifted = constraint.a.mul_vec(x_k);
        for (s, l) in shifted.iter_mut().zip(lambda_k) {
            *s = l + self.rho * *s;
        }
        let mut rhs = constraint.b.tr_mul_vec(&shifted);
        for v in &mut rhs {
            *v = -*v;
        }
        match &self.kind {
            OmegaKind::Quadratic(chol) => Ok(chol.solve(&rhs)),
            OmegaKind::Proximal { beta } => {
                let t = 1.0 / (self.rho * beta);
                let v: Vec<f64> = rhs.iter().map(|r| r * t).collect();
                Ok(match &constraint.regularizer {
                    Regularizer::L1 { tau } => soft_threshold(&v, tau * t),
                    other => other.prox(&v, t),
                })
            }
        }
    }
}

fn scalar_multiple_of_identity(m: &Matrix) -> Option<f64> {
    let n = m.rows();
    if n == 0 {
        return None;
    }
    let beta = (0..n).map(|i| m[(i, i)]).sum::<f64>() / n as f64;
    if beta <= 0.0 {
        return None;
    }
    let tol = ORTHOGONALITY_TOL * beta;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { beta } else { 0.0 };
            if (m[(i, j)] - target).abs() > tol {
                return None;
            }
        }
    }
    Some(beta)
}

/// One-shot ω-update.
pub fn solve_omega_subproblem(
    constraint: &ConstraintSpec,
    rho: f64,
    x_k: &[f64],
    lambda_k: &[f64],
) -> Result<Vec<f64>> {
    OmegaSolver::new(constraint, rho)?.solve(constraint, x_k, lambda_k)
}

/// `−Bᵀλₖ − ρBᵀ(Axₖ + Bω⁺)`, which must lie in `∂R(ω⁺)`.
pub fn omega_optimality_subgradient(
    constraint: &ConstraintSpec,
    rho: f64,
    x_k: &[f64],
    lambda_k: &[f64],
    omega_next: &[f64],
) -> Result<Vec<f64>> {
    let mut shifted = constraint.residual(x_k, omega_next)?;
    for (s, l) in shifted.iter_mut().zip(lambda_k) {
        *s = l + rho * *s;
    }
    let mut g = constraint.b.tr_mul_vec(&shifted);
    for v in &mut g {
        *v = -*v;
    }
    Ok(g)
}

/// Distance of the ω-update's optimality subgradient from `∂R(ω⁺)`;
/// `None` for custom regularizers.
pub fn omega_optimality_residual(
    constraint: &ConstraintSpec,
    rho: f64,
    x_k: &[f64],
    lambda_k: &[f64],
    omega_next: &[f64],
) -> Result<Option<f64>> {
    let g = omega_optimality_subgradient(constraint, rho, x_k, lambda_k, omega_next)?;
    Ok(constraint.regularizer.subgradient_residual(omega_next, &g))
}

/// Solves the linearized x-update
/// `((1/η)I + ρAᵀA) x = xₖ/η − ĝ − Aᵀλₖ − ρAᵀBω⁺`
/// with the factorization of the normal matrix cached across calls.
#[derive(Debug, Clone)]
pub struct XSolver {
    spd: SpdCache,
}

impl XSolver {
    pub fn new(constraint: &ConstraintSpec) -> Self {
        Self {
            spd: SpdCache::new(&constraint.a),
        }
    }

    pub fn refactorizations(&self) -> usize {
        self.spd.refactorizations()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn solve(
        &mut self,
        constraint: &ConstraintSpec,
        rho: f64,
        x_k: &[f64],
        lambda_k: &[f64],
        omega_next: &[f64],
        grad_est: &[f64],
        eta_eff: f64,
    ) -> Result<Vec<f64>> {
        if !(eta_eff > 0.0 && eta_eff.is_finite()) {
            return Err(Error::Precondition(format!("stepsize must be > 0, got {eta_eff}")));
        }
        check_len("x", constraint.dim_x(), x_k.len())?;
        check_len("gradient estimate", constraint.dim_x(), grad_est.len())?;
        check_len("lambda", constraint.rows(), lambda_k.len())?;
        check_len("omega", constraint.dim_omega(), omega_next.len())?;
        check_finite("gradient estimate", grad_est)?;
        let inv_eta = 1.0 / eta_eff;
        // Aᵀ(λ + ρBω⁺)
        let mut shifted = constraint.b.mul_vec(omega_next);
        for (s, l) in shifted.iter_mut().zip(lambda_k) {
            *s = l + rho * *s;
        }
        let coupling = constraint.a.tr_mul_vec(&shifted);
        let rhs: Vec<f64> = x_k
            .iter()
            .zip(grad_est)
            .zip(&coupling)
            .map(|((x, g), c)| x * inv_eta - g - c)
            .collect();
        self.spd.solve(inv_eta, rho, &rhs)
    }
}

/// One-shot x-update.
#[allow(clippy::too_many_arguments)]
pub fn solve_x_subproblem(
    constraint: &ConstraintSpec,
    rho: f64,
    x_k: &[f64],
    lambda_k: &[f64],
    omega_next: &[f64],
    grad_est: &[f64],
    eta_eff: f64,
) -> Result<Vec<f64>> {
    XSolver::new(constraint).solve(constraint, rho, x_k, lambda_k, omega_next, grad_est, eta_eff)
}

/// `λ + ρ(Ax⁺ + Bω⁺)`
pub fn update_dual(
    rho: f64,
    lambda_k: &[f64],
    a: &Matrix,
    b: &Matrix,
    x_next: &[f64],
    omega_next: &[f64],
) -> Result<Vec<f64>> {
    check_len("lambda", a.rows(), lambda_k.len())?;
    check_len("x", a.cols(), x_next.len())?;
    check_len("omega", b.cols(), omega_next.len())?;
    let mut out = lambda_k.to_vec();
    axpy(rho, &a.mul_vec(x_next), &mut out);
    axpy(rho, &b.mul_vec(omega_next), &mut out);
    Ok(out)
}

/// `A†` (q×p), with an empty constraint mapping to a q×0 matrix.
pub fn constraint_pinv(constraint: &ConstraintSpec) -> Result<Matrix> {
    if constraint.rows() == 0 {
        return Ok(Matrix::zeros(constraint.dim_x(), 0));
    }
    pseudoinverse(&constraint.a, PINV_DEFAULT_TOL)
}

/// `λ̃ = −(Aᵀ)†∇F(x̃) = −(A†)ᵀ∇F(x̃)` given `a_pinv = A†`.
pub fn dual_reset(a_pinv: &Matrix, grad_at_reference: &[f64]) -> Result<Vec<f64>> {
    check_len("gradient", a_pinv.rows(), grad_at_reference.len())?;
    let mut out = a_pinv.tr_mul_vec(grad_at_reference);
    for v in &mut out {
        *v = -*v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::sync::Arc;
    use alloc::vec;

    fn consensus(q: usize, reg: Regularizer) -> ConstraintSpec {
        ConstraintSpec::new(Matrix::identity(q), Matrix::scaled_identity(q, -1.0), reg).unwrap()
    }

    #[test]
    fn omega_without_regularizer_hits_feasibility() {
        let c = consensus(2, Regularizer::None);
        let w = solve_omega_subproblem(&c, 1.0, &[2.0, 3.0], &[0.0, 0.0]).unwrap();
        assert!((w[0] - 2.0).abs() < 1e-15 && (w[1] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn omega_ridge_normal_equation() {
        let c = ConstraintSpec::new(
            Matrix::identity(1),
            Matrix::identity(1),
            Regularizer::ScaledSquaredNorm { mu: 1.0 },
        )
        .unwrap();
        let w = solve_omega_subproblem(&c, 1.0, &[1.0], &[0.0]).unwrap();
        assert!((w[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn omega_l1_large_threshold_is_zero() {
        let c = consensus(3, Regularizer::L1 { tau: 1e6 });
        let w = solve_omega_subproblem(&c, 2.0, &[1.0, -4.0, 0.5], &[0.3, 0.0, -1.0]).unwrap();
        assert_eq!(w, vec![0.0; 3]);
    }

    #[test]
    fn omega_l1_satisfies_subgradient_condition() {
        let c = consensus(3, Regularizer::L1 { tau: 0.7 });
        let (x, l) = ([1.0, -0.1, 0.5], [0.3, 0.2, -1.0]);
        let w = solve_omega_subproblem(&c, 2.0, &x, &l).unwrap();
        let res = omega_optimality_residual(&c, 2.0, &x, &l, &w).unwrap().unwrap();
        assert!(res < 1e-12, "residual {res}");
    }

    #[test]
    fn omega_l1_rejects_non_orthogonal_b() {
        let c = ConstraintSpec::new(
            Matrix::identity(2),
            Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]),
            Regularizer::L1 { tau: 1.0 },
        )
        .unwrap();
        assert!(matches!(OmegaSolver::new(&c, 1.0), Err(Error::Unsupported(_))));
    }

    #[derive(Debug)]
    struct BoxIndicator;

    impl crate::problem::Proximal for BoxIndicator {
        fn value(&self, _w: &[f64]) -> f64 {
            0.0
        }

        fn prox(&self, v: &[f64], _t: f64, out: &mut [f64]) {
            for (o, x) in out.iter_mut().zip(v) {
                *o = x.clamp(-1.0, 1.0);
            }
        }
    }

    #[test]
    fn omega_custom_prox_projects() {
        let c = ConstraintSpec::new(
            Matrix::identity(2),
            Matrix::scaled_identity(2, -2.0),
            Regularizer::Custom(Arc::new(BoxIndicator)),
        )
        .unwrap();
        // v = −Bᵀ(ρAx)/(ρβ) = 2x/4 = x/2
        let w = solve_omega_subproblem(&c, 1.0, &[6.0, 1.0], &[0.0, 0.0]).unwrap();
        assert_eq!(w, vec![1.0, 0.5]);
    }

    #[test]
    fn x_update_without_coupling_is_gradient_step() {
        let c = ConstraintSpec::new(Matrix::zeros(1, 2), Matrix::identity(1), Regularizer::None).unwrap();
        let x = solve_x_subproblem(&c, 3.0, &[1.0, 2.0], &[0.5], &[0.25], &[4.0, -2.0], 0.5).unwrap();
        assert!((x[0] - (1.0 - 0.5 * 4.0)).abs() < 1e-15);
        assert!((x[1] - (2.0 + 0.5 * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn x_update_scalar_normal_equation() {
        let c = ConstraintSpec::new(
            Matrix::identity(1),
            Matrix::scaled_identity(1, -1.0),
            Regularizer::None,
        )
        .unwrap();
        let x = solve_x_subproblem(&c, 1.0, &[0.0], &[0.0], &[0.0], &[1.0], 1.0).unwrap();
        assert!((x[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn x_update_rejects_nonpositive_stepsize() {
        let c = consensus(1, Regularizer::None);
        assert!(solve_x_subproblem(&c, 1.0, &[0.0], &[0.0], &[0.0], &[1.0], 0.0).is_err());
        assert!(matches!(
            solve_x_subproblem(&c, 1.0, &[0.0], &[0.0], &[0.0], &[f64::INFINITY], 1.0),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn dual_update_examples() {
        let a = Matrix::identity(2);
        let b = Matrix::scaled_identity(2, -1.0);
        let l = update_dual(5.0, &[1.0, -2.0], &a, &b, &[3.0, 4.0], &[3.0, 4.0]).unwrap();
        assert_eq!(l, vec![1.0, -2.0]);
        let l = update_dual(2.0, &[0.0, 0.0], &a, &b, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!(l, vec![2.0, -2.0]);
    }

    #[test]
    fn dual_reset_identity_and_zero_gradient() {
        let c = consensus(3, Regularizer::None);
        let pinv = constraint_pinv(&c).unwrap();
        let l = dual_reset(&pinv, &[1.0, -2.0, 0.5]).unwrap();
        for (a, b) in l.iter().zip([-1.0, 2.0, -0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(dual_reset(&pinv, &[0.0; 3]).unwrap(), vec![0.0; 3]);
    }
}
