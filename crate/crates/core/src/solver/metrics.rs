use alloc::vec::Vec;

use crate::error::Result;
use crate::linalg::vector::{dot, sub};
use crate::problem::{CompositionProblem, ConstraintSpec, OracleLedger};

/// A primal-dual solution `(x*, ω*, λ*)` used as the gap oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x: Vec<f64>,
    pub omega: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `F(x*) + R(ω*)`
    pub objective: f64,
    /// First-order residual achieved when the solution was computed.
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapMetrics {
    pub objective: f64,
    pub feasibility: f64,
    /// `F(x) + R(ω) − F(x*) − R(ω*)`
    pub objective_gap: Option<f64>,
    /// `G(u)` with `∇F(x*) = −Aᵀλ*` and `∂R(ω*) ∋ −Bᵀλ*`.
    pub bregman_gap: Option<f64>,
}

/// Objective, feasibility and (with a reference) both gaps at `(x, ω)`.
/// Oracle use is not charged to any run ledger.
pub fn gap_metrics(
    problem: &CompositionProblem,
    constraint: &ConstraintSpec,
    reference: Option<&ReferenceSolution>,
    x: &[f64],
    omega: &[f64],
) -> Result<GapMetrics> {
    let mut scratch = OracleLedger::new();
    let f_x = problem.value(x, &mut scratch)?;
    let r_w = constraint.regularizer.value(omega);
    let feasibility = constraint.feasibility(x, omega)?;
    let (objective_gap, bregman_gap) = match reference {
        None => (None, None),
        Some(sol) => {
            let f_star = problem.value(&sol.x, &mut scratch)?;
            let r_star = constraint.regularizer.value(&sol.omega);
            // ∇F(x*) = −Aᵀλ*,  ∂R(ω*) ∋ −Bᵀλ*
            let grad_f_star = neg(&constraint.a.tr_mul_vec(&sol.lambda));
            let sub_r_star = neg(&constraint.b.tr_mul_vec(&sol.lambda));
            let f_part = f_x - f_star - dot(&grad_f_star, &sub(x, &sol.x));
            let r_part = r_w - r_star - dot(&sub_r_star, &sub(omega, &sol.omega));
            (Some(f_x + r_w - (f_star + r_star)), Some(f_part + r_part))
        }
    };
    Ok(GapMetrics {
        objective: f_x + r_w,
        feasibility,
        objective_gap,
        bregman_gap,
    })
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}
