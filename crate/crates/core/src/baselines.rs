//! Unconstrained comparison solvers on `min F(x) + R(x)`: compositional SGD
//! with exact inner enumeration, and a compositional SVRG loop built on the
//! same estimators as the strongly convex ADMM.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::estimators::{minibatch_inner_estimate, vr_gradient_biased, ReferenceCache};
use crate::linalg::vector::RunningMean;
use crate::problem::{CompositionProblem, ConstraintSpec, OracleLedger, Regularizer};
use crate::solver::{initial_point, should_stop, state_ok, Recorder, RunError, RunOptions, Trace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Constant(f64),
    /// `c / √(t + 1)` at step t = 0, 1, …
    InvSqrt(f64),
}

impl StepSize {
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            StepSize::Constant(eta) => eta,
            StepSize::InvSqrt(c) => c / libm::sqrt((t + 1) as f64),
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            StepSize::Constant(v) | StepSize::InvSqrt(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    /// SGD steps, or SVRG epochs.
    pub iterations: usize,
    pub step: StepSize,
    /// Inner steps per SVRG epoch.
    pub k: usize,
    /// SVRG mini-batch size.
    pub n: usize,
    /// SGD trace row spacing, in steps.
    pub record_every: usize,
    pub stop_tolerance: Option<f64>,
    pub x0: Option<Vec<f64>>,
}

impl BaselineConfig {
    pub fn new(iterations: usize, step: StepSize) -> Self {
        Self {
            iterations,
            step,
            k: 10,
            n: 1,
            record_every: 1,
            stop_tolerance: None,
            x0: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.step.scale();
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Config(format!("stepsize must be >= 0, got {s}")));
        }
        if self.k == 0 || self.n == 0 || self.record_every == 0 {
            return Err(Error::Config("K, N and record_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Result of a baseline run.
#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub trace: Trace,
    pub x: Vec<f64>,
    pub ledger: OracleLedger,
}

fn regularized_step(regularizer: &Regularizer, x: &[f64], grad: &[f64], eta: f64) -> Vec<f64> {
    match regularizer.gradient(x) {
        Some(gr) => x
            .iter()
            .zip(grad)
            .zip(&gr)
            .map(|((xi, gi), ri)| xi - eta * (gi + ri))
            .collect(),
        None => {
            let v: Vec<f64> = x.iter().zip(grad).map(|(xi, gi)| xi - eta * gi).collect();
            regularizer.prox(&v, eta)
        }
    }
}

/// Compositional SGD: each step enumerates `g(x)` and `∂g(x)` (2m
/// queries) and samples one `∇fᵢ` (1 query), then takes a gradient step on
/// `F + R` (a proximal step when R is non-smooth).
///
/// Trace rows use the step count as the epoch column and `x` for both
/// blocks of the consensus splitting.
pub fn run_sgd<R: Rng + ?Sized>(
    problem: &CompositionProblem,
    regularizer: &Regularizer,
    config: &BaselineConfig,
    rng: &mut R,
    options: RunOptions<'_>,
) -> Result<BaselineRun, RunError> {
    config.validate()?;
    regularizer.validate()?;
    let q = problem.dim_x();
    let consensus = ConstraintSpec::consensus(q, regularizer.clone());
    let mut ledger = OracleLedger::new();
    let mut recorder = Recorder::new("sgd", options.reference, options.clock);
    let mut x = initial_point(&config.x0, q, "x0")?;

    let gap = recorder.record(problem, &consensus, 0, ledger.query_total(), &x, &x)?;
    if !should_stop(gap, config.stop_tolerance) {
        for t in 0..config.iterations {
            let gx = problem.mean_inner(&x, &mut ledger)?;
            let i = problem.sample_outer(rng);
            let outer = problem.outer_gradient_vec(i, &gx, &mut ledger);
            let grad = problem.mean_jacobian_tr_mul(&x, &outer, &mut ledger)?;
            x = regularized_step(regularizer, &x, &grad, config.step.at(t));
            if !state_ok(&[&x]) {
                return Err(recorder.diverged(t + 1));
            }
            let done = t + 1;
            if done % config.record_every == 0 || done == config.iterations {
                let gap = recorder.record(problem, &consensus, done, ledger.query_total(), &x, &x)?;
                if should_stop(gap, config.stop_tolerance) {
                    break;
                }
            }
        }
    }
    Ok(BaselineRun {
        trace: recorder.trace,
        x,
        ledger,
    })
}

/// Compositional SVRG without constraints: per epoch a reference refresh
/// (2m + n) and K steps of mini-batch estimate (2N) plus biased gradient (4)
/// with `x ← x − η(∇F̂ + ∇R(x))`. The epoch output is the inner average.
pub fn run_comp_svrg<R: Rng + ?Sized>(
    problem: &CompositionProblem,
    regularizer: &Regularizer,
    config: &BaselineConfig,
    rng: &mut R,
    options: RunOptions<'_>,
) -> Result<BaselineRun, RunError> {
    config.validate()?;
    regularizer.validate()?;
    if !regularizer.is_smooth() {
        return Err(Error::Unsupported("comp-SVRG needs a smooth regularizer".into()).into());
    }
    let q = problem.dim_x();
    let consensus = ConstraintSpec::consensus(q, regularizer.clone());
    let mut ledger = OracleLedger::new();
    let mut recorder = Recorder::new("comp-svrg", options.reference, options.clock);

    let mut x_tilde = initial_point(&config.x0, q, "x0")?;
    let mut cache = ReferenceCache::build(problem, &x_tilde, 0, &mut ledger)?;
    let gap = recorder.record(problem, &consensus, 0, ledger.query_total(), &x_tilde, &x_tilde)?;

    let mut batch = vec![0usize; config.n];
    let mut t = 0;
    if !should_stop(gap, config.stop_tolerance) {
        for s in 1..=config.iterations {
            let mut x = x_tilde.clone();
            let mut avg = RunningMean::new(q);
            for _ in 0..config.k {
                for b in batch.iter_mut() {
                    *b = problem.sample_inner(rng);
                }
                let g_hat = minibatch_inner_estimate(problem, &cache, &x, &batch, &mut ledger)?;
                let i_k = problem.sample_outer(rng);
                let j_k = problem.sample_inner(rng);
                let grad = vr_gradient_biased(problem, &cache, &x, i_k, j_k, &g_hat, &mut ledger)?;
                x = regularized_step(regularizer, &x, &grad, config.step.at(t));
                t += 1;
                if !state_ok(&[&x]) {
                    return Err(recorder.diverged(s));
                }
                avg.push(&x);
            }
            x_tilde = avg.mean();
            cache = ReferenceCache::build(problem, &x_tilde, s, &mut ledger)?;
            let gap = recorder.record(problem, &consensus, s, ledger.query_total(), &x_tilde, &x_tilde)?;
            if should_stop(gap, config.stop_tolerance) {
                break;
            }
        }
    }
    Ok(BaselineRun {
        trace: recorder.trace,
        x: x_tilde,
        ledger,
    })
}
