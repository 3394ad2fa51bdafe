//! Runs every configured solver and writes traces plus a summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use compadmm_core::baselines::{run_comp_svrg, run_sgd, BaselineConfig, StepSize};
use compadmm_core::linalg::Matrix;
use compadmm_core::problems::{gen_policy_eval, gen_portfolio, gen_synthetic_quadratic};
use compadmm_core::reference::{reference_solve, ReferenceOptions};
use compadmm_core::{
    run_algorithm1, run_algorithm2, CompositionProblem, ConstraintSpec, Mode, ReferenceSolution, RunError,
    RunOptions, SolverConfig, Trace,
};

use crate::config::{Algorithm, ExperimentConfig, ProblemConfig, RunConfig};
use crate::error::{BenchError, Result};
use crate::trace_io::write_trace;

/// Target gap reported in the summary.
pub const SUMMARY_GAP: f64 = 1e-4;

/// A generated problem together with its reference optimum.
pub struct Prepared {
    pub problem: CompositionProblem,
    pub constraint: ConstraintSpec,
    pub reference: ReferenceSolution,
}

impl Prepared {
    pub fn new(problem: CompositionProblem, constraint: ConstraintSpec, reference: ReferenceSolution) -> Self {
        Self {
            problem,
            constraint,
            reference,
        }
    }

    pub fn l_f(&self) -> Option<f64> {
        self.problem.smoothness.l_big_f
    }

    /// `A = I`, `B = −I`: the baselines solve the same problem unconstrained.
    pub fn is_consensus(&self) -> bool {
        let q = self.problem.dim_x();
        self.constraint.a == Matrix::identity(q) && self.constraint.b == Matrix::scaled_identity(q, -1.0)
    }
}

/// Generates the instance; the synthetic quadratic carries its own optimum,
/// the other generators go through [`reference_solve`].
pub fn prepare(cfg: &ProblemConfig) -> Result<Prepared> {
    if let Some(spec) = cfg.quadratic_spec() {
        let inst = gen_synthetic_quadratic(&spec)?;
        return Ok(Prepared::new(inst.problem, inst.constraint, inst.optimum));
    }
    let (problem, constraint) = match (cfg.portfolio_spec(), cfg.policy_spec()) {
        (Some(spec), _) => gen_portfolio(&spec)?,
        (_, Some(spec)) => gen_policy_eval(&spec)?,
        _ => unreachable!("three problem kinds"),
    };
    let reference = reference_solve(&problem, &constraint, &ReferenceOptions::default())?;
    Ok(Prepared::new(problem, constraint, reference))
}

fn stepsize(run: &RunConfig, l_f: Option<f64>) -> Result<f64> {
    match (run.eta, l_f) {
        (Some(eta), _) => Ok(eta),
        (None, Some(l)) => Ok(run.eta_scale / l),
        (None, None) => Err(BenchError::Config(format!(
            "run {:?}: no eta given and L_F unknown",
            run.id
        ))),
    }
}

fn check_run(prepared: &Prepared, run: &RunConfig) -> Result<()> {
    if run.algo.is_baseline() && !prepared.is_consensus() {
        return Err(BenchError::Config(format!(
            "run {:?}: {} needs the A = I, B = -I splitting",
            run.id,
            run.algo.tag()
        )));
    }
    if run.algo != Algorithm::ComSvrAdmmNonsmooth {
        stepsize(run, run.l_f.or(prepared.l_f()))?;
    }
    Ok(())
}

/// Runs one configured solver with the given seed.
pub fn run_one(prepared: &Prepared, run: &RunConfig, seed: u64, clock: Option<&dyn Fn() -> u64>) -> Result<Trace, RunError> {
    check_run(prepared, run).map_err(|e| match e {
        BenchError::Core(c) => RunError::Invalid(c),
        other => RunError::Invalid(compadmm_core::Error::Config(other.to_string())),
    })?;
    let l_f = run.l_f.or(prepared.l_f());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let options = RunOptions {
        reference: Some(&prepared.reference),
        clock,
        observer: None,
    };
    let eta = stepsize(run, l_f).unwrap_or(0.0);
    let mut trace = match run.algo {
        Algorithm::ComSvrAdmm | Algorithm::ComSvrAdmmSmooth | Algorithm::ComSvrAdmmNonsmooth => {
            let mode = match run.algo {
                Algorithm::ComSvrAdmm => Mode::StronglyConvex,
                Algorithm::ComSvrAdmmSmooth => Mode::ConvexSmooth,
                _ => Mode::ConvexNonsmooth,
            };
            let mut cfg = SolverConfig::new(mode);
            (cfg.k, cfg.s, cfg.n, cfg.eta, cfg.rho) = (run.k, run.epochs, run.n, eta, run.rho);
            (cfg.l_f, cfg.seed, cfg.stop_tolerance) = (l_f, seed, run.stop_tolerance);
            let out = if mode == Mode::StronglyConvex {
                run_algorithm1(&prepared.problem, &prepared.constraint, &cfg, &mut rng, options)?
            } else {
                run_algorithm2(&prepared.problem, &prepared.constraint, &cfg, &mut rng, options)?
            };
            out.trace
        }
        Algorithm::CompSvrg | Algorithm::SgdConst | Algorithm::SgdInvSqrt => {
            let step = match run.algo {
                Algorithm::SgdInvSqrt => StepSize::InvSqrt(eta),
                _ => StepSize::Constant(eta),
            };
            let mut cfg = BaselineConfig::new(run.epochs, step);
            (cfg.k, cfg.n, cfg.record_every, cfg.stop_tolerance) = (run.k, run.n, run.record_every, run.stop_tolerance);
            let reg = &prepared.constraint.regularizer;
            let out = if run.algo == Algorithm::CompSvrg {
                run_comp_svrg(&prepared.problem, reg, &cfg, &mut rng, options)?
            } else {
                run_sgd(&prepared.problem, reg, &cfg, &mut rng, options)?
            };
            out.trace
        }
    };
    trace.algorithm = run.algo.tag().to_string();
    Ok(trace)
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub run_id: String,
    pub rep: usize,
    pub algorithm: &'static str,
    pub seed: u64,
    /// `ok`, `diverged` or an error message.
    pub status: String,
    pub trace: Trace,
    pub csv: PathBuf,
}

#[derive(Debug, Clone)]
pub struct Summary {
    pub outcomes: Vec<Outcome>,
    pub reference_converged: bool,
    pub reference_residual: f64,
}

fn file_stem(cfg: &ExperimentConfig, run: &RunConfig, rep: usize) -> String {
    if cfg.repetitions == 1 {
        run.id.clone()
    } else {
        format!("{}-r{rep}", run.id)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn summary_csv(summary: &Summary) -> String {
    let mut s = String::from(
        "run_id,rep,algorithm,seed,status,rows,epochs,oracle_calls,final_objective,final_gap,calls_to_1e-4\n",
    );
    for o in &summary.outcomes {
        let last = o.trace.last();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            o.run_id,
            o.rep,
            o.algorithm,
            o.seed,
            o.status,
            o.trace.rows.len(),
            last.map(|r| r.epoch.to_string()).unwrap_or_default(),
            last.map(|r| r.oracle_calls.to_string()).unwrap_or_default(),
            last.map(|r| r.objective.to_string()).unwrap_or_default(),
            opt(last.and_then(|r| r.objective_gap)),
            o.trace.calls_to_gap(SUMMARY_GAP).map(|c| c.to_string()).unwrap_or_default(),
        );
    }
    s
}

/// Runs all `(run, repetition)` pairs on `jobs` threads (0 = all cores),
/// writes `<stem>.csv` per pair and `summary.csv` into `out_dir`.
///
/// Diverged runs keep their partial trace and make the call return
/// [`BenchError::Diverged`] after everything is written.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, jobs: usize) -> Result<Summary> {
    let prepared = prepare(&cfg.problem)?;
    for run in &cfg.runs {
        check_run(&prepared, run)?;
    }
    std::fs::create_dir_all(out_dir).map_err(|e| BenchError::io(out_dir, e))?;
    let tasks: Vec<(usize, usize)> = (0..cfg.runs.len())
        .flat_map(|i| (0..cfg.repetitions).map(move |r| (i, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, rep)| {
                let run = &cfg.runs[i];
                let seed = cfg.run_seed(i, rep);
                let start = Instant::now();
                let clock = move || start.elapsed().as_nanos() as u64;
                let stem = file_stem(cfg, run, rep);
                let (status, mut trace) = match run_one(&prepared, run, seed, Some(&clock)) {
                    Ok(t) => ("ok".to_string(), t),
                    Err(RunError::Diverged { trace, .. }) => ("diverged".to_string(), trace),
                    Err(RunError::Invalid(e)) => (format!("error: {e}").replace(',', ";"), Trace::new("", "")),
                };
                trace.run_id = stem.clone();
                trace.algorithm = run.algo.tag().to_string();
                Outcome {
                    run_id: run.id.clone(),
                    rep,
                    algorithm: run.algo.tag(),
                    seed,
                    status,
                    trace,
                    csv: out_dir.join(format!("{stem}.csv")),
                }
            })
            .collect()
    });
    for o in &outcomes {
        write_trace(&o.trace, &o.csv)?;
    }
    let summary = Summary {
        outcomes,
        reference_converged: prepared.reference.converged,
        reference_residual: prepared.reference.residual,
    };
    let path = out_dir.join("summary.csv");
    std::fs::write(&path, summary_csv(&summary)).map_err(|e| BenchError::io(&path, e))?;

    let failed: Vec<&Outcome> = summary.outcomes.iter().filter(|o| o.status != "ok").collect();
    if let Some(bad) = failed.iter().find(|o| o.status.starts_with("error")) {
        return Err(BenchError::Config(format!("run {}: {}", bad.run_id, bad.status)));
    }
    if !failed.is_empty() {
        return Err(BenchError::Diverged {
            count: failed.len(),
            ids: failed.iter().map(|o| o.trace.run_id.as_str()).collect::<Vec<_>>().join(", "),
        });
    }
    Ok(summary)
}
