//! com-SVR-ADMM: stochastic variance-reduced ADMM for linearly constrained
//! composition problems.
//!
//! [`run_algorithm1`] is the strongly convex loop (mini-batch inner
//! estimate, biased gradient, dual reset through `A†`); [`run_algorithm2`]
//! is the general convex loop (exact inner mean, unbiased gradient,
//! decaying `η_{s,k}` schedule, averaged output).

mod algorithm1;
mod algorithm2;
mod config;
mod metrics;
mod schedule;
mod subproblems;
mod trace;

use alloc::string::String;
use alloc::vec::Vec;

pub use algorithm1::run_algorithm1;
pub use algorithm2::run_algorithm2;
pub use config::{Mode, SolverConfig};
pub use metrics::{gap_metrics, GapMetrics, ReferenceSolution};
pub use schedule::{schedule, ScheduleValue};
pub use subproblems::{
    constraint_pinv, dual_reset, omega_optimality_residual, omega_optimality_subgradient,
    solve_omega_subproblem, solve_x_subproblem, update_dual, OmegaSolver, XSolver,
};
pub use trace::{Trace, TraceRow};

use crate::error::Error;
use crate::linalg::vector::norm;
use crate::problem::{CompositionProblem, ConstraintSpec, OracleLedger};

/// Iterates whose norm exceeds this abort the run.
pub const DIVERGENCE_BOUND: f64 = 1e12;

/// State around one inner iteration, handed to [`RunOptions::observer`].
#[derive(Debug, Clone, Copy)]
pub struct StepRecord<'a> {
    pub epoch: usize,
    pub k: usize,
    pub x_prev: &'a [f64],
    pub lambda_prev: &'a [f64],
    pub omega_next: &'a [f64],
    pub grad_est: &'a [f64],
    pub eta_eff: f64,
    pub x_next: &'a [f64],
    pub lambda_next: &'a [f64],
}

/// Optional inputs shared by every solver entry point.
#[derive(Default)]
pub struct RunOptions<'a> {
    /// Enables gap columns in the trace and early stopping.
    pub reference: Option<&'a ReferenceSolution>,
    /// Monotone nanosecond clock for the `wall_ns` column.
    pub clock: Option<&'a dyn Fn() -> u64>,
    /// Called after every inner iteration.
    pub observer: Option<&'a mut dyn FnMut(&StepRecord<'_>)>,
}

/// An averaged primal point.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedPoint {
    pub x: Vec<f64>,
    pub omega: Vec<f64>,
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct Run {
    pub trace: Trace,
    /// Output point (`x̃ˢ` for the strongly convex loop, `x̄` otherwise).
    pub x: Vec<f64>,
    pub omega: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `z̄` built from the inner averages `ẋˢ` (general convex loop only).
    pub z_bar: Option<AveragedPoint>,
    /// Last epoch's dual average `λ̃ˢ` (general convex loop only; the
    /// carried-over `λᴷ` is what drives the iteration).
    pub lambda_average: Option<Vec<f64>>,
    pub ledger: OracleLedger,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("run diverged in epoch {epoch}")]
    Diverged { epoch: usize, trace: Trace },
}

pub(crate) fn state_ok(vectors: &[&[f64]]) -> bool {
    vectors
        .iter()
        .all(|v| v.iter().all(|x| x.is_finite()) && norm(v) <= DIVERGENCE_BOUND)
}

/// Appends trace rows and decides on early stopping.
pub(crate) struct Recorder<'a> {
    pub trace: Trace,
    reference: Option<&'a ReferenceSolution>,
    clock: Option<&'a dyn Fn() -> u64>,
    start_ns: u64,
}

impl<'a> Recorder<'a> {
    pub fn new(algorithm: &str, reference: Option<&'a ReferenceSolution>, clock: Option<&'a dyn Fn() -> u64>) -> Self {
        let start_ns = clock.map_or(0, |c| c());
        Self {
            trace: Trace::new("", algorithm),
            reference,
            clock,
            start_ns,
        }
    }

    /// Records `(x, ω)` and returns its objective gap, if a reference exists.
    pub fn record(
        &mut self,
        problem: &CompositionProblem,
        constraint: &ConstraintSpec,
        epoch: usize,
        oracle_calls: u64,
        x: &[f64],
        omega: &[f64],
    ) -> Result<Option<f64>, Error> {
        let m = gap_metrics(problem, constraint, self.reference, x, omega)?;
        let wall_ns = self.clock.map_or(0, |c| c().saturating_sub(self.start_ns));
        self.trace.rows.push(TraceRow {
            epoch: epoch as u64,
            oracle_calls,
            objective: m.objective,
            objective_gap: m.objective_gap,
            bregman_gap: m.bregman_gap,
            feasibility: m.feasibility,
            wall_ns,
        });
        Ok(m.objective_gap)
    }

    pub fn diverged(self, epoch: usize) -> RunError {
        RunError::Diverged {
            epoch,
            trace: self.trace,
        }
    }
}

pub(crate) fn should_stop(gap: Option<f64>, tolerance: Option<f64>) -> bool {
    matches!((gap, tolerance), (Some(g), Some(t)) if g <= t)
}

pub(crate) fn initial_point(given: &Option<Vec<f64>>, dim: usize, what: &'static str) -> Result<Vec<f64>, Error> {
    match given {
        Some(v) => {
            crate::error::check_len(what, dim, v.len())?;
            crate::error::check_finite(what, v)?;
            Ok(v.clone())
        }
        None => Ok(alloc::vec![0.0; dim]),
    }
}
