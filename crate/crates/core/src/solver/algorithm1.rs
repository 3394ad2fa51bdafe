use alloc::format;

use rand::Rng;

use super::config::{Mode, SolverConfig};
use super::subproblems::{constraint_pinv, dual_reset, update_dual, OmegaSolver, XSolver};
use super::{initial_point, should_stop, state_ok, Recorder, Run, RunError, RunOptions, StepRecord};
use crate::error::Error;
use crate::estimators::{minibatch_inner_estimate, vr_gradient_biased, ReferenceCache};
use crate::linalg::vector::RunningMean;
use crate::problem::{CompositionProblem, ConstraintSpec, OracleLedger};

/// Strongly convex com-SVR-ADMM.
///
/// Each epoch refreshes `g(x̃)` and `∇F(x̃)` (2m + n queries), then runs K
/// inner steps of ω-update, mini-batch estimate `ĝ` (2N), biased gradient
/// (4), linearized x-update and dual ascent. The epoch output is the
/// average of `x¹..x^K` (and `ω¹..ω^K`), and the dual restarts from
/// `λ̃ = −(Aᵀ)†∇F(x̃)`. The snapshot computed for that reset is reused as
/// the next epoch's reference, so the ledger grows by exactly
/// `2m + n + K(2N + 4)` per epoch.
///
/// Draw order per inner step: the N batch indices, then `i_k`, then `j_k`.
pub fn run_algorithm1<R: Rng + ?Sized>(
    problem: &CompositionProblem,
    constraint: &ConstraintSpec,
    config: &SolverConfig,
    rng: &mut R,
    mut options: RunOptions<'_>,
) -> Result<Run, RunError> {
    if config.mode != Mode::StronglyConvex {
        return Err(Error::Config("run_algorithm1 needs Mode::StronglyConvex".into()).into());
    }
    let mut warnings = config.validate()?;
    constraint.check_problem(problem)?;
    if !constraint.has_full_row_rank()? {
        return Err(Error::Precondition("A must have full row rank".into()).into());
    }
    if let (None, Some(l)) = (config.l_f, problem.smoothness.l_big_f) {
        if config.eta > 1.0 / l {
            warnings.push(format!(
                "eta = {} exceeds 1/L_F = {} from problem metadata",
                config.eta,
                1.0 / l
            ));
        }
    }

    let (q, l) = (problem.dim_x(), constraint.dim_omega());
    let rho = config.rho;
    let omega_solver = OmegaSolver::new(constraint, rho)?;
    let mut x_solver = XSolver::new(constraint);
    let a_pinv = constraint_pinv(constraint)?;

    let mut ledger = OracleLedger::new();
    let mut recorder = Recorder::new("com-svr-admm", options.reference, options.clock);

    let mut x_tilde = initial_point(&config.x0, q, "x0")?;
    let mut omega_tilde = initial_point(&config.omega0, l, "omega0")?;
    let mut cache = ReferenceCache::build(problem, &x_tilde, 0, &mut ledger)?;
    let mut lambda_tilde = dual_reset(&a_pinv, &cache.grad_tilde)?;
    let gap = recorder.record(problem, constraint, 0, ledger.query_total(), &x_tilde, &omega_tilde)?;

    let mut batch = alloc::vec![0usize; config.n];
    if !should_stop(gap, config.stop_tolerance) {
        for s in 1..=config.s {
            let mut x = x_tilde.clone();
            let mut lambda = lambda_tilde.clone();
            let mut x_avg = RunningMean::new(q);
            let mut omega_avg = RunningMean::new(l);

            for k in 0..config.k {
                let omega_next = omega_solver.solve(constraint, &x, &lambda)?;
                for b in batch.iter_mut() {
                    *b = problem.sample_inner(rng);
                }
                let g_hat = minibatch_inner_estimate(problem, &cache, &x, &batch, &mut ledger)?;
                let i_k = problem.sample_outer(rng);
                let j_k = problem.sample_inner(rng);
                let grad = vr_gradient_biased(problem, &cache, &x, i_k, j_k, &g_hat, &mut ledger)?;
                let x_next = x_solver.solve(constraint, rho, &x, &lambda, &omega_next, &grad, config.eta)?;
                let lambda_next = update_dual(rho, &lambda, &constraint.a, &constraint.b, &x_next, &omega_next)?;

                if let Some(obs) = options.observer.as_mut() {
                    obs(&StepRecord {
                        epoch: s,
                        k,
                        x_prev: &x,
                        lambda_prev: &lambda,
                        omega_next: &omega_next,
                        grad_est: &grad,
                        eta_eff: config.eta,
                        x_next: &x_next,
                        lambda_next: &lambda_next,
                    });
                }
                if !state_ok(&[&x_next, &omega_next, &lambda_next]) {
                    return Err(recorder.diverged(s));
                }
                x_avg.push(&x_next);
                omega_avg.push(&omega_next);
                x = x_next;
                lambda = lambda_next;
            }

            x_tilde = x_avg.mean();
            omega_tilde = omega_avg.mean();
            cache = ReferenceCache::build(problem, &x_tilde, s, &mut ledger)?;
            lambda_tilde = dual_reset(&a_pinv, &cache.grad_tilde)?;

            let gap = recorder.record(problem, constraint, s, ledger.query_total(), &x_tilde, &omega_tilde)?;
            if should_stop(gap, config.stop_tolerance) {
                break;
            }
        }
    }

    Ok(Run {
        trace: recorder.trace,
        x: x_tilde,
        omega: omega_tilde,
        lambda: lambda_tilde,
        z_bar: None,
        lambda_average: None,
        ledger,
        warnings,
    })
}
