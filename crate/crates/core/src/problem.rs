//! Problem abstraction for `min F(x) + R(ω)  s.t.  Ax + Bω = 0` with
//! `F(x) = Σᵢ uᵢ fᵢ(Σⱼ wⱼ gⱼ(x))`.
//!
//! Component indices are zero-based throughout.

use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::error::{check_finite, check_len, Error, Result};
use crate::linalg::vector::{axpy, norm, norm_sq};
use crate::linalg::{rank, Matrix, PINV_DEFAULT_TOL};

/// Sampling oracles for the inner maps `gⱼ: ℝ^q → ℝ^r` and the outer
/// functions `fᵢ: ℝ^r → ℝ`.
///
/// Implementations may assume indices and buffer lengths are valid; the
/// [`CompositionProblem`] wrapper checks them.
pub trait Composition: Send + Sync {
    /// q
    fn dim_x(&self) -> usize;
    /// r
    fn dim_y(&self) -> usize;
    /// m
    fn inner_count(&self) -> usize;
    /// n
    fn outer_count(&self) -> usize;

    fn inner_value(&self, j: usize, x: &[f64], out: &mut [f64]);

    /// Writes the r×q Jacobian `∂gⱼ(x)`.
    fn inner_jacobian(&self, j: usize, x: &[f64], out: &mut Matrix);

    /// `out += alpha · ∂gⱼ(x)ᵀ v`. Override when the Jacobian is structured.
    fn inner_jacobian_tr_mul(&self, j: usize, x: &[f64], v: &[f64], alpha: f64, out: &mut [f64]) {
        let mut jac = Matrix::zeros(self.dim_y(), self.dim_x());
        self.inner_jacobian(j, x, &mut jac);
        jac.tr_mul_vec_acc(alpha, v, out);
    }

    fn outer_value(&self, i: usize, y: &[f64]) -> f64;

    fn outer_gradient(&self, i: usize, y: &[f64], out: &mut [f64]);
}

/// Counts oracle accesses.
///
/// The four fine-grained counters track every access separately. The query
/// counter treats a value+Jacobian access of the same `gⱼ` at the same
/// point as one query, so an epoch costs `2m + n + K(2N + 4)` queries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OracleLedger {
    pub inner_value_queries: u64,
    pub inner_jacobian_queries: u64,
    pub outer_value_queries: u64,
    pub outer_gradient_queries: u64,
    queries: u64,
}

impl OracleLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn total(&self) -> u64 {
        self.inner_value_queries
            + self.inner_jacobian_queries
            + self.outer_value_queries
            + self.outer_gradient_queries
    }

    pub fn query_total(&self) -> u64 {
        self.queries
    }

    fn inner_value(&mut self, count: u64) {
        self.inner_value_queries += count;
        self.queries += count;
    }

    fn inner_jacobian(&mut self, count: u64) {
        self.inner_jacobian_queries += count;
        self.queries += count;
    }

    fn inner_combined(&mut self, count: u64) {
        self.inner_value_queries += count;
        self.inner_jacobian_queries += count;
        self.queries += count;
    }

    fn outer_value(&mut self, count: u64) {
        self.outer_value_queries += count;
        self.queries += count;
    }

    fn outer_gradient(&mut self, count: u64) {
        self.outer_gradient_queries += count;
        self.queries += count;
    }
}

/// Discrete sampling distribution over component indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

const WEIGHT_SUM_TOL: f64 = 1e-12;

impl Weights {
    pub fn uniform(n: usize) -> Self {
        Self::new(vec![1.0 / n as f64; n]).expect("uniform weights are valid")
    }

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Contract("weights must be non-empty".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Contract("weights must be finite and nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Contract(format!("weights sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cumulative.last_mut().expect("non-empty") = 1.0;
        Ok(Self { probs, cumulative })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.probs[idx]
    }

    /// Inverse-CDF sampling.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.probs.len() - 1)
    }
}

/// Optional regularity constants of the composition.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Smoothness {
    /// Lipschitz constant of `∂gⱼ(x)ᵀ∇fᵢ(g(x))` over all (i, j).
    pub l_big_f: Option<f64>,
    /// Lipschitz constant of each `∇fᵢ`.
    pub l_small_f: Option<f64>,
    pub c_g: Option<f64>,
    pub l_g: Option<f64>,
    /// Strong convexity modulus of F.
    pub mu_f: Option<f64>,
}

/// A weighted two-level composition problem.
pub struct CompositionProblem {
    oracle: Box<dyn Composition>,
    inner_weights: Weights,
    outer_weights: Weights,
    pub smoothness: Smoothness,
}

impl fmt::Debug for CompositionProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositionProblem")
            .field("q", &self.dim_x())
            .field("r", &self.dim_y())
            .field("m", &self.inner_count())
            .field("n", &self.outer_count())
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl CompositionProblem {
    /// Uniform inner and outer weights.
    pub fn new(oracle: impl Composition + 'static) -> Self {
        let m = oracle.inner_count();
        let n = oracle.outer_count();
        Self {
            oracle: Box::new(oracle),
            inner_weights: Weights::uniform(m),
            outer_weights: Weights::uniform(n),
            smoothness: Smoothness::default(),
        }
    }

    pub fn with_weights(
        oracle: impl Composition + 'static,
        inner_weights: Weights,
        outer_weights: Weights,
    ) -> Result<Self> {
        check_len("inner weights", oracle.inner_count(), inner_weights.len())?;
        check_len("outer weights", oracle.outer_count(), outer_weights.len())?;
        Ok(Self {
            oracle: Box::new(oracle),
            inner_weights,
            outer_weights,
            smoothness: Smoothness::default(),
        })
    }

    pub fn with_smoothness(mut self, smoothness: Smoothness) -> Self {
        self.smoothness = smoothness;
        self
    }

    pub fn dim_x(&self) -> usize {
        self.oracle.dim_x()
    }

    pub fn dim_y(&self) -> usize {
        self.oracle.dim_y()
    }

    pub fn inner_count(&self) -> usize {
        self.oracle.inner_count()
    }

    pub fn outer_count(&self) -> usize {
        self.oracle.outer_count()
    }

    pub fn inner_weights(&self) -> &Weights {
        &self.inner_weights
    }

    pub fn outer_weights(&self) -> &Weights {
        &self.outer_weights
    }

    pub fn oracle(&self) -> &dyn Composition {
        self.oracle.as_ref()
    }

    pub fn sample_inner<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.inner_weights.sample(rng)
    }

    pub fn sample_outer<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.outer_weights.sample(rng)
    }

    pub(crate) fn check_x(&self, x: &[f64]) -> Result<()> {
        check_len("x", self.dim_x(), x.len())
    }

    pub(crate) fn check_y(&self, y: &[f64]) -> Result<()> {
        check_len("inner value", self.dim_y(), y.len())
    }

    pub(crate) fn check_inner_index(&self, j: usize) -> Result<()> {
        if j >= self.inner_count() {
            return Err(Error::Index {
                what: "inner component",
                index: j,
                len: self.inner_count(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_outer_index(&self, i: usize) -> Result<()> {
        if i >= self.outer_count() {
            return Err(Error::Index {
                what: "outer component",
                index: i,
                len: self.outer_count(),
            });
        }
        Ok(())
    }

    /// `gⱼ(x)` and `∂gⱼ(x)`.
    pub fn eval_inner(
        &self,
        j: usize,
        x: &[f64],
        ledger: &mut OracleLedger,
    ) -> Result<(Vec<f64>, Matrix)> {
        self.check_inner_index(j)?;
        self.check_x(x)?;
        let mut value = vec![0.0; self.dim_y()];
        let mut jac = Matrix::zeros(self.dim_y(), self.dim_x());
        self.oracle.inner_value(j, x, &mut value);
        self.oracle.inner_jacobian(j, x, &mut jac);
        ledger.inner_combined(1);
        Ok((value, jac))
    }

    /// `gⱼ(x)` only.
    pub fn eval_inner_value(&self, j: usize, x: &[f64], ledger: &mut OracleLedger) -> Result<Vec<f64>> {
        self.check_inner_index(j)?;
        self.check_x(x)?;
        let mut value = vec![0.0; self.dim_y()];
        self.oracle.inner_value(j, x, &mut value);
        ledger.inner_value(1);
        Ok(value)
    }

    pub(crate) fn inner_value_into(
        &self,
        j: usize,
        x: &[f64],
        out: &mut [f64],
        ledger: &mut OracleLedger,
    ) {
        self.oracle.inner_value(j, x, out);
        ledger.inner_value(1);
    }

    /// `out += alpha · ∂gⱼ(x)ᵀ v`, one Jacobian query.
    pub(crate) fn jacobian_tr_mul(
        &self,
        j: usize,
        x: &[f64],
        v: &[f64],
        alpha: f64,
        out: &mut [f64],
        ledger: &mut OracleLedger,
    ) {
        self.oracle.inner_jacobian_tr_mul(j, x, v, alpha, out);
        ledger.inner_jacobian(1);
    }

    /// `∇fᵢ(y)`, one outer-gradient query.
    pub(crate) fn outer_gradient_vec(&self, i: usize, y: &[f64], ledger: &mut OracleLedger) -> Vec<f64> {
        let mut grad = vec![0.0; self.dim_y()];
        self.oracle.outer_gradient(i, y, &mut grad);
        ledger.outer_gradient(1);
        grad
    }

    /// `g(x) = Σⱼ wⱼ gⱼ(x)`; exactly m inner-value queries.
    pub fn mean_inner(&self, x: &[f64], ledger: &mut OracleLedger) -> Result<Vec<f64>> {
        self.check_x(x)?;
        let r = self.dim_y();
        let mut acc = vec![0.0; r];
        let mut buf = vec![0.0; r];
        for j in 0..self.inner_count() {
            self.inner_value_into(j, x, &mut buf, ledger);
            axpy(self.inner_weights.get(j), &buf, &mut acc);
        }
        Ok(acc)
    }

    /// `Σᵢ uᵢ ∇fᵢ(y)`; exactly n outer-gradient queries.
    pub fn mean_outer_gradient(&self, y: &[f64], ledger: &mut OracleLedger) -> Result<Vec<f64>> {
        self.check_y(y)?;
        let r = self.dim_y();
        let mut acc = vec![0.0; r];
        let mut buf = vec![0.0; r];
        for i in 0..self.outer_count() {
            self.oracle.outer_gradient(i, y, &mut buf);
            axpy(self.outer_weights.get(i), &buf, &mut acc);
        }
        ledger.outer_gradient(self.outer_count() as u64);
        Ok(acc)
    }

    /// `∂g(x)ᵀ v = Σⱼ wⱼ ∂gⱼ(x)ᵀ v`; exactly m Jacobian queries.
    pub fn mean_jacobian_tr_mul(&self, x: &[f64], v: &[f64], ledger: &mut OracleLedger) -> Result<Vec<f64>> {
        self.check_x(x)?;
        self.check_y(v)?;
        let mut out = vec![0.0; self.dim_x()];
        for j in 0..self.inner_count() {
            self.jacobian_tr_mul(j, x, v, self.inner_weights.get(j), &mut out, ledger);
        }
        Ok(out)
    }

    /// Weighted Jacobian mean `∂g(x)`; exactly m Jacobian queries.
    pub fn mean_jacobian(&self, x: &[f64], ledger: &mut OracleLedger) -> Result<Matrix> {
        self.check_x(x)?;
        let mut acc = Matrix::zeros(self.dim_y(), self.dim_x());
        let mut buf = Matrix::zeros(self.dim_y(), self.dim_x());
        for j in 0..self.inner_count() {
            self.oracle.inner_jacobian(j, x, &mut buf);
            acc.add_scaled(self.inner_weights.get(j), &buf);
        }
        ledger.inner_jacobian(self.inner_count() as u64);
        Ok(acc)
    }

    /// `∇F(x) = ∂g(x)ᵀ Σᵢ uᵢ ∇fᵢ(g(x))`.
    ///
    /// Counted as m combined inner queries plus n outer-gradient queries
    /// (`m + n` queries).
    pub fn full_gradient(&self, x: &[f64], ledger: &mut OracleLedger) -> Result<Vec<f64>> {
        self.check_x(x)?;
        let mut scratch = OracleLedger::new();
        let gx = self.mean_inner(x, &mut scratch)?;
        let v = self.mean_outer_gradient(&gx, &mut scratch)?;
        let grad = self.mean_jacobian_tr_mul(x, &v, &mut scratch)?;
        ledger.inner_combined(self.inner_count() as u64);
        ledger.outer_gradient(self.outer_count() as u64);
        Ok(grad)
    }

    /// `∇F(x)` reusing a previously computed `g(x)`: m Jacobian plus n
    /// outer-gradient queries.
    pub fn full_gradient_at(&self, x: &[f64], gx: &[f64], ledger: &mut OracleLedger) -> Result<Vec<f64>> {
        self.check_x(x)?;
        self.check_y(gx)?;
        let v = self.mean_outer_gradient(gx, ledger)?;
        self.mean_jacobian_tr_mul(x, &v, ledger)
    }

    /// `F(x)` by full enumeration: m inner-value and n outer-value queries.
    pub fn value(&self, x: &[f64], ledger: &mut OracleLedger) -> Result<f64> {
        let gx = self.mean_inner(x, ledger)?;
        let mut total = 0.0;
        for i in 0..self.outer_count() {
            total += self.outer_weights.get(i) * self.oracle.outer_value(i, &gx);
        }
        ledger.outer_value(self.outer_count() as u64);
        Ok(total)
    }
}

/// Proximal operator of a user-supplied convex regularizer.
pub trait Proximal: Send + Sync + fmt::Debug {
    fn value(&self, w: &[f64]) -> f64;

    /// `argmin_w R(w) + ‖w − v‖² / (2t)`
    fn prox(&self, v: &[f64], t: f64, out: &mut [f64]);
}

/// The regularizer `R(ω)`.
#[derive(Debug, Clone)]
pub enum Regularizer {
    None,
    /// `(μ/2)‖ω‖²`
    ScaledSquaredNorm { mu: f64 },
    /// `τ‖ω‖₁`
    L1 { tau: f64 },
    Custom(Arc<dyn Proximal>),
}

impl Regularizer {
    pub fn validate(&self) -> Result<()> {
        match self {
            Regularizer::ScaledSquaredNorm { mu } if !(*mu >= 0.0 && mu.is_finite()) => {
                Err(Error::Config(format!("ridge weight must be >= 0, got {mu}")))
            }
            Regularizer::L1 { tau } if !(*tau >= 0.0 && tau.is_finite()) => {
                Err(Error::Config(format!("l1 weight must be >= 0, got {tau}")))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        match self {
            Regularizer::None => 0.0,
            Regularizer::ScaledSquaredNorm { mu } => 0.5 * mu * norm_sq(w),
            Regularizer::L1 { tau } => tau * w.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::Custom(p) => p.value(w),
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, Regularizer::None | Regularizer::ScaledSquaredNorm { .. })
    }

    /// `∇R(ω)` for smooth regularizers.
    pub fn gradient(&self, w: &[f64]) -> Option<Vec<f64>> {
        match self {
            Regularizer::None => Some(vec![0.0; w.len()]),
            Regularizer::ScaledSquaredNorm { mu } => Some(w.iter().map(|v| mu * v).collect()),
            _ => None,
        }
    }

    /// Distance from `g` to the subdifferential `∂R(ω)`, when computable.
    pub fn subgradient_residual(&self, w: &[f64], g: &[f64]) -> Option<f64> {
        match self {
            Regularizer::L1 { tau } => {
                let mut sq = 0.0;
                for (wi, gi) in w.iter().zip(g) {
                    let d = if *wi > 0.0 {
                        gi - tau
                    } else if *wi < 0.0 {
                        gi + tau
                    } else {
                        f64::max(gi.abs() - tau, 0.0)
                    };
                    sq += d * d;
                }
                Some(libm::sqrt(sq))
            }
            Regularizer::Custom(_) => None,
            smooth => {
                let grad = smooth.gradient(w)?;
                Some(norm(&crate::linalg::vector::sub(g, &grad)))
            }
        }
    }

    /// `argmin_w R(w) + ‖w − v‖²/(2t)`
    pub fn prox(&self, v: &[f64], t: f64) -> Vec<f64> {
        match self {
            Regularizer::None => v.to_vec(),
            Regularizer::ScaledSquaredNorm { mu } => v.iter().map(|x| x / (1.0 + t * mu)).collect(),
            Regularizer::L1 { tau } => soft_threshold(v, t * tau),
            Regularizer::Custom(p) => {
                let mut out = vec![0.0; v.len()];
                p.prox(v, t, &mut out);
                out
            }
        }
    }
}

/// Componentwise `sign(v)·max(|v| − κ, 0)`.
pub fn soft_threshold(v: &[f64], kappa: f64) -> Vec<f64> {
    v.iter()
        .map(|&x| {
            if x > kappa {
                x - kappa
            } else if x < -kappa {
                x + kappa
            } else {
                0.0
            }
        })
        .collect()
}

/// Linear coupling `Ax + Bω = 0` and the regularizer on ω.
#[derive(Debug, Clone)]
pub struct ConstraintSpec {
    pub a: Matrix,
    pub b: Matrix,
    pub regularizer: Regularizer,
}

impl ConstraintSpec {
    pub fn new(a: Matrix, b: Matrix, regularizer: Regularizer) -> Result<Self> {
        if a.rows() != b.rows() {
            return Err(Error::Shape {
                what: "constraint rows (A vs B)",
                expected: a.rows(),
                got: b.rows(),
            });
        }
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::NonFinite("constraint matrices"));
        }
        regularizer.validate()?;
        Ok(Self { a, b, regularizer })
    }

    /// `x = ω` splitting: `A = I`, `B = −I`.
    pub fn consensus(q: usize, regularizer: Regularizer) -> Self {
        Self::new(
            Matrix::identity(q),
            Matrix::scaled_identity(q, -1.0),
            regularizer,
        )
        .expect("consensus constraint is well formed")
    }

    /// p
    pub fn rows(&self) -> usize {
        self.a.rows()
    }

    /// q
    pub fn dim_x(&self) -> usize {
        self.a.cols()
    }

    /// l
    pub fn dim_omega(&self) -> usize {
        self.b.cols()
    }

    pub fn check_problem(&self, problem: &CompositionProblem) -> Result<()> {
        check_len("constraint columns (A vs x)", problem.dim_x(), self.dim_x())
    }

    pub fn has_full_row_rank(&self) -> Result<bool> {
        if self.rows() == 0 {
            return Ok(true);
        }
        Ok(rank(&self.a, PINV_DEFAULT_TOL)? == self.rows())
    }

    /// `Ax + Bω`
    pub fn residual(&self, x: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        check_len("x", self.dim_x(), x.len())?;
        check_len("omega", self.dim_omega(), w.len())?;
        let mut r = self.a.mul_vec(x);
        axpy(1.0, &self.b.mul_vec(w), &mut r);
        Ok(r)
    }

    pub fn feasibility(&self, x: &[f64], w: &[f64]) -> Result<f64> {
        Ok(norm(&self.residual(x, w)?))
    }
}

/// `F(x) + R(ω)` with F evaluated by full enumeration.
pub fn objective(
    problem: &CompositionProblem,
    constraint: &ConstraintSpec,
    x: &[f64],
    w: &[f64],
    ledger: &mut OracleLedger,
) -> Result<f64> {
    check_len("omega", constraint.dim_omega(), w.len())?;
    check_finite("omega", w)?;
    Ok(problem.value(x, ledger)? + constraint.regularizer.value(w))
}
