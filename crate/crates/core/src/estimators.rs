//! Variance-reduced gradient estimators around a reference point x̃.
//!
//! * [`minibatch_inner_estimate`]: `ĝ(x) = g(x̃) − (1/N) Σ_b (g_b(x̃) − g_b(x))`
//! * [`vr_gradient_biased`]: `∂g_j(x)ᵀ∇f_i(ĝ(x)) − ∂g_j(x̃)ᵀ∇f_i(g(x̃)) + ∇F(x̃)`
//! * [`vr_gradient_unbiased`]: same with the exact `g(x)` in place of `ĝ(x)`

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};
use crate::linalg::vector::{dist, sub};
use crate::problem::{CompositionProblem, OracleLedger};

/// Snapshot data refreshed once per epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCache {
    pub x_tilde: Vec<f64>,
    /// `g(x̃)`
    pub g_tilde: Vec<f64>,
    /// `∇F(x̃)`
    pub grad_tilde: Vec<f64>,
    pub epoch: usize,
}

impl ReferenceCache {
    /// Costs m inner-value queries for `g(x̃)`, then m Jacobian and n
    /// outer-gradient queries for `∇F(x̃)`.
    pub fn build(
        problem: &CompositionProblem,
        x_tilde: &[f64],
        epoch: usize,
        ledger: &mut OracleLedger,
    ) -> Result<Self> {
        let g_tilde = problem.mean_inner(x_tilde, ledger)?;
        let grad_tilde = problem.full_gradient_at(x_tilde, &g_tilde, ledger)?;
        Ok(Self {
            x_tilde: x_tilde.to_vec(),
            g_tilde,
            grad_tilde,
            epoch,
        })
    }

    /// Recomputes `g(x̃)` and `∇F(x̃)` off the books and reports the larger
    /// deviation from the cached values.
    pub fn consistency_error(&self, problem: &CompositionProblem) -> Result<f64> {
        let mut scratch = OracleLedger::new();
        let g = problem.mean_inner(&self.x_tilde, &mut scratch)?;
        let grad = problem.full_gradient(&self.x_tilde, &mut scratch)?;
        Ok(f64::max(dist(&g, &self.g_tilde), dist(&grad, &self.grad_tilde)))
    }
}

/// Mini-batch estimate of `g(x_k)` around the reference point; 2N
/// inner-value queries. `batch` holds inner indices drawn with replacement.
pub fn minibatch_inner_estimate(
    problem: &CompositionProblem,
    cache: &ReferenceCache,
    x_k: &[f64],
    batch: &[usize],
    ledger: &mut OracleLedger,
) -> Result<Vec<f64>> {
    if batch.is_empty() {
        return Err(Error::Contract("mini-batch must be non-empty".into()));
    }
    problem.check_x(x_k)?;
    for &j in batch {
        problem.check_inner_index(j)?;
    }
    let r = problem.dim_y();
    let mut diff_sum = vec![0.0; r];
    let mut at_ref = vec![0.0; r];
    let mut at_k = vec![0.0; r];
    for &j in batch {
        problem.inner_value_into(j, &cache.x_tilde, &mut at_ref, ledger);
        problem.inner_value_into(j, x_k, &mut at_k, ledger);
        for ((d, a), b) in diff_sum.iter_mut().zip(&at_ref).zip(&at_k) {
            *d += a - b;
        }
    }
    let inv_n = 1.0 / batch.len() as f64;
    Ok(cache
        .g_tilde
        .iter()
        .zip(&diff_sum)
        .map(|(g, d)| g - inv_n * d)
        .collect())
}

/// Biased variance-reduced gradient built on the mini-batch estimate
/// `g_hat`; 4 queries.
pub fn vr_gradient_biased(
    problem: &CompositionProblem,
    cache: &ReferenceCache,
    x_k: &[f64],
    i_k: usize,
    j_k: usize,
    g_hat: &[f64],
    ledger: &mut OracleLedger,
) -> Result<Vec<f64>> {
    corrected_gradient(problem, cache, x_k, i_k, j_k, g_hat, ledger)
}

/// Unbiased variance-reduced gradient built on the exact `g(x_k)`
/// supplied by the caller; 4 queries.
pub fn vr_gradient_unbiased(
    problem: &CompositionProblem,
    cache: &ReferenceCache,
    x_k: &[f64],
    i_k: usize,
    j_k: usize,
    g_exact: &[f64],
    ledger: &mut OracleLedger,
) -> Result<Vec<f64>> {
    corrected_gradient(problem, cache, x_k, i_k, j_k, g_exact, ledger)
}

fn corrected_gradient(
    problem: &CompositionProblem,
    cache: &ReferenceCache,
    x_k: &[f64],
    i_k: usize,
    j_k: usize,
    y_k: &[f64],
    ledger: &mut OracleLedger,
) -> Result<Vec<f64>> {
    problem.check_outer_index(i_k)?;
    problem.check_inner_index(j_k)?;
    problem.check_x(x_k)?;
    check_len("inner estimate", problem.dim_y(), y_k.len())?;
    let q = problem.dim_x();

    let outer_k = problem.outer_gradient_vec(i_k, y_k, ledger);
    let mut current = vec![0.0; q];
    problem.jacobian_tr_mul(j_k, x_k, &outer_k, 1.0, &mut current, ledger);

    let outer_ref = problem.outer_gradient_vec(i_k, &cache.g_tilde, ledger);
    let mut reference = vec![0.0; q];
    problem.jacobian_tr_mul(j_k, &cache.x_tilde, &outer_ref, 1.0, &mut reference, ledger);

    // (current − reference) first so the correction vanishes exactly at x̃.
    let mut out = sub(&current, &reference);
    for (o, g) in out.iter_mut().zip(&cache.grad_tilde) {
        *o += g;
    }
    Ok(out)
}
