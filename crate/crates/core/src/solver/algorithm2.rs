use rand::Rng;

use super::config::{Mode, SolverConfig};
use super::schedule::schedule;
use super::subproblems::{update_dual, OmegaSolver, XSolver};
use super::{
    initial_point, should_stop, state_ok, AveragedPoint, Recorder, Run, RunError, RunOptions, StepRecord,
};
use crate::error::Error;
use crate::estimators::{vr_gradient_unbiased, ReferenceCache};
use crate::linalg::vector::RunningMean;
use crate::problem::{CompositionProblem, ConstraintSpec, OracleLedger};

/// General convex com-SVR-ADMM (smooth or non-smooth schedule).
///
/// Epoch s starts from the carried-over `(x̂, ω̂, λ̂)` of epoch s − 1 with the
/// reference point `x̃ = x̃ˢ⁻¹`. Every inner step computes the exact
/// `g(xᵏ)` (m queries) and the unbiased gradient (4 queries), so the ledger
/// grows by `2m + n + K(m + 4)` per epoch. Trace rows report the running
/// output average `ū = (x̄, ω̄)`.
///
/// Draw order per inner step: `i_k`, then `j_k`.
pub fn run_algorithm2<R: Rng + ?Sized>(
    problem: &CompositionProblem,
    constraint: &ConstraintSpec,
    config: &SolverConfig,
    rng: &mut R,
    mut options: RunOptions<'_>,
) -> Result<Run, RunError> {
    let tag = match config.mode {
        Mode::ConvexSmooth => "com-svr-admm-smooth",
        Mode::ConvexNonsmooth => "com-svr-admm-nonsmooth",
        Mode::StronglyConvex => {
            return Err(Error::Config("run_algorithm2 needs a convex schedule mode".into()).into())
        }
    };
    let warnings = config.validate()?;
    constraint.check_problem(problem)?;
    let (q, l, p) = (problem.dim_x(), constraint.dim_omega(), constraint.rows());
    let rho = config.rho;
    let omega_solver = OmegaSolver::new(constraint, rho)?;
    let mut x_solver = XSolver::new(constraint);

    let mut ledger = OracleLedger::new();
    let mut recorder = Recorder::new(tag, options.reference, options.clock);

    let mut x_tilde = initial_point(&config.x0, q, "x0")?;
    let mut x_hat = x_tilde.clone();
    let mut omega_hat = initial_point(&config.omega0, l, "omega0")?;
    let mut lambda_hat = initial_point(&config.lambda0, p, "lambda0")?;
    // Ĝ⁰ = I
    let mut g_hat_scale = 1.0;

    let mut x_bar = RunningMean::new(q);
    let mut omega_bar = RunningMean::new(l);
    let mut x_dot_bar = RunningMean::new(q);
    let mut lambda_tilde = None;

    let gap = recorder.record(problem, constraint, 0, ledger.query_total(), &x_tilde, &omega_hat)?;
    let mut out_x = x_tilde.clone();
    let mut out_omega = omega_hat.clone();

    if !should_stop(gap, config.stop_tolerance) {
        for s in 1..=config.s {
            let cache = ReferenceCache::build(problem, &x_tilde, s, &mut ledger)?;
            let mut x = x_hat.clone();
            let mut omega = omega_hat.clone();
            let mut lambda = lambda_hat.clone();

            let first = schedule(config.mode, s, 0, config.k, config.l_f)?;
            debug_assert!((first.c - g_hat_scale).abs() <= 1e-12 * g_hat_scale);

            let mut x_avg = RunningMean::new(q);
            let mut omega_avg = RunningMean::new(l);
            let mut lambda_avg = RunningMean::new(p);
            let mut x_dot = RunningMean::new(q);

            for k in 0..config.k {
                x_dot.push(&x);
                let omega_next = omega_solver.solve(constraint, &x, &lambda)?;
                let g_exact = problem.mean_inner(&x, &mut ledger)?;
                let i_k = problem.sample_outer(rng);
                let j_k = problem.sample_inner(rng);
                let grad = vr_gradient_unbiased(problem, &cache, &x, i_k, j_k, &g_exact, &mut ledger)?;
                let step = schedule(config.mode, s, k, config.k, config.l_f)?;
                let x_next = x_solver.solve(constraint, rho, &x, &lambda, &omega_next, &grad, step.eta_eff)?;
                let lambda_next = update_dual(rho, &lambda, &constraint.a, &constraint.b, &x_next, &omega_next)?;

                if let Some(obs) = options.observer.as_mut() {
                    obs(&StepRecord {
                        epoch: s,
                        k,
                        x_prev: &x,
                        lambda_prev: &lambda,
                        omega_next: &omega_next,
                        grad_est: &grad,
                        eta_eff: step.eta_eff,
                        x_next: &x_next,
                        lambda_next: &lambda_next,
                    });
                }
                if !state_ok(&[&x_next, &omega_next, &lambda_next]) {
                    return Err(recorder.diverged(s));
                }
                x_avg.push(&x_next);
                omega_avg.push(&omega_next);
                lambda_avg.push(&lambda_next);
                x = x_next;
                omega = omega_next;
                lambda = lambda_next;
            }

            x_tilde = x_avg.mean();
            let omega_tilde = omega_avg.mean();
            lambda_tilde = Some(lambda_avg.mean());
            x_hat = x;
            omega_hat = omega;
            lambda_hat = lambda;
            g_hat_scale = schedule(config.mode, s, config.k, config.k, config.l_f)?.c;

            x_bar.push(&x_tilde);
            omega_bar.push(&omega_tilde);
            x_dot_bar.push(&x_dot.mean());
            out_x = x_bar.mean();
            out_omega = omega_bar.mean();

            let gap = recorder.record(problem, constraint, s, ledger.query_total(), &out_x, &out_omega)?;
            if should_stop(gap, config.stop_tolerance) {
                break;
            }
        }
    }

    let z_bar = (x_dot_bar.count() > 0).then(|| AveragedPoint {
        x: x_dot_bar.mean(),
        omega: out_omega.clone(),
    });
    Ok(Run {
        trace: recorder.trace,
        x: out_x,
        omega: out_omega,
        lambda: lambda_hat,
        z_bar,
        lambda_average: lambda_tilde,
        ledger,
        warnings,
    })
}
