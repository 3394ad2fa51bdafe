//! Mean-variance portfolio selection as a two-level composition.
//!
//! With per-slot returns `rᵢ ∈ ℝᴺ`, the inner maps stack the decision with
//! the slot return, `gⱼ(x) = (x, ⟨rⱼ, x⟩)`, so `g(x) = (x, r̄ᵀx)`, and the
//! outer functions are `fᵢ(y) = −⟨rᵢ, y₁..y_N⟩ + (⟨rᵢ, y₁..y_N⟩ − y_{N+1})²`.
//! Averaging over i gives `−mean⟨rᵢ,x⟩ + mean(⟨rᵢ,x⟩ − mean⟨rⱼ,x⟩)²`.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::vector::{dist, dot, norm};
use crate::linalg::{spectral_bounds, Matrix};
use crate::problem::{Composition, CompositionProblem, ConstraintSpec, Regularizer, Smoothness};

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioSpec {
    pub n_assets: usize,
    pub n_slots: usize,
    /// Covariance scale of the simulated returns.
    pub cov: f64,
    /// Ridge weight of `R(ω) = (μ/2)‖ω‖²`.
    pub mu_r: f64,
    pub seed: u64,
}

impl PortfolioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_assets == 0 || self.n_slots == 0 {
            return Err(Error::Config("portfolio needs at least one asset and one slot".into()));
        }
        if !(self.cov > 0.0 && self.cov.is_finite()) {
            return Err(Error::Config(format!("cov must be > 0, got {}", self.cov)));
        }
        if !(self.mu_r >= 0.0 && self.mu_r.is_finite()) {
            return Err(Error::Config(format!("mu_R must be >= 0, got {}", self.mu_r)));
        }
        Ok(())
    }
}

/// Oracle over an explicit return table (slots × assets).
#[derive(Debug, Clone)]
pub struct Portfolio {
    returns: Matrix,
}

impl Portfolio {
    pub fn new(returns: Matrix) -> Result<Self> {
        if returns.is_empty() {
            return Err(Error::Config("return table is empty".into()));
        }
        if !returns.is_finite() {
            return Err(Error::NonFinite("returns"));
        }
        Ok(Self { returns })
    }

    pub fn returns(&self) -> &Matrix {
        &self.returns
    }

    fn assets(&self) -> usize {
        self.returns.cols()
    }

    /// The mean-variance objective evaluated directly from the returns.
    pub fn direct_objective(&self, x: &[f64]) -> f64 {
        let n = self.returns.rows() as f64;
        let rx: Vec<f64> = (0..self.returns.rows())
            .map(|i| dot(self.returns.row(i), x))
            .collect();
        let mean = rx.iter().sum::<f64>() / n;
        let var = rx.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        -mean + var
    }

    /// Mean return vector `r̄`.
    pub fn mean_return(&self) -> Vec<f64> {
        let n = self.returns.rows() as f64;
        let mut m = alloc::vec![0.0; self.assets()];
        for i in 0..self.returns.rows() {
            for (a, r) in m.iter_mut().zip(self.returns.row(i)) {
                *a += r / n;
            }
        }
        m
    }

    /// Hessian of F: twice the (1/n-normalized) sample covariance.
    pub fn hessian(&self) -> Matrix {
        let n = self.returns.rows();
        let mean = self.mean_return();
        let centered = Matrix::from_fn(n, self.assets(), |i, j| self.returns[(i, j)] - mean[j]);
        let mut h = centered.gram();
        h.scale(2.0 / n as f64);
        h
    }

    pub fn smoothness(&self) -> Smoothness {
        let n = self.returns.rows();
        let mean = self.mean_return();
        let mut l_big_f: f64 = 0.0;
        let mut l_small_f: f64 = 0.0;
        let mut c_g: f64 = 0.0;
        for i in 0..n {
            let ri = self.returns.row(i);
            let spread = (0..n).map(|j| dist(ri, self.returns.row(j))).fold(0.0, f64::max);
            l_big_f = l_big_f.max(2.0 * spread * dist(ri, &mean));
            let rn = norm(ri);
            l_small_f = l_small_f.max(2.0 * (rn * rn + 1.0));
            c_g = c_g.max(libm::sqrt(1.0 + rn * rn));
        }
        let mu_f = spectral_bounds(&self.hessian()).ok().map(|(_, lo)| lo).filter(|v| *v > 0.0);
        Smoothness {
            l_big_f: (l_big_f > 0.0).then_some(l_big_f),
            l_small_f: Some(l_small_f),
            c_g: Some(c_g),
            l_g: None,
            mu_f,
        }
    }
}

impl Composition for Portfolio {
    fn dim_x(&self) -> usize {
        self.assets()
    }

    fn dim_y(&self) -> usize {
        self.assets() + 1
    }

    fn inner_count(&self) -> usize {
        self.returns.rows()
    }

    fn outer_count(&self) -> usize {
        self.returns.rows()
    }

    fn inner_value(&self, j: usize, x: &[f64], out: &mut [f64]) {
        let n = self.assets();
        out[..n].copy_from_slice(x);
        out[n] = dot(self.returns.row(j), x);
    }

    fn inner_jacobian(&self, j: usize, _x: &[f64], out: &mut Matrix) {
        let n = self.assets();
        for r in 0..n {
            for c in 0..n {
                out[(r, c)] = if r == c { 1.0 } else { 0.0 };
            }
        }
        out.row_mut(n).copy_from_slice(self.returns.row(j));
    }

    fn inner_jacobian_tr_mul(&self, j: usize, _x: &[f64], v: &[f64], alpha: f64, out: &mut [f64]) {
        let n = self.assets();
        let tail = alpha * v[n];
        for ((o, vi), r) in out.iter_mut().zip(&v[..n]).zip(self.returns.row(j)) {
            *o += alpha * vi + tail * r;
        }
    }

    fn outer_value(&self, i: usize, y: &[f64]) -> f64 {
        let n = self.assets();
        let a = dot(self.returns.row(i), &y[..n]);
        let d = a - y[n];
        -a + d * d
    }

    fn outer_gradient(&self, i: usize, y: &[f64], out: &mut [f64]) {
        let n = self.assets();
        let ri = self.returns.row(i);
        let d = dot(ri, &y[..n]) - y[n];
        let coef = 2.0 * d - 1.0;
        for (o, r) in out[..n].iter_mut().zip(ri) {
            *o = coef * r;
        }
        out[n] = -2.0 * d;
    }
}

/// Simulated returns `rᵢ = μ + Lξᵢ` with `μₖ ~ U[0.5, 1.5]`, `ξᵢ ~ N(0, I)`
/// and `LLᵀ = cov·(0.5·I + 0.5·𝟙𝟙ᵀ/N)`.
pub fn simulate_returns(spec: &PortfolioSpec) -> Result<Matrix> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_assets = spec.n_assets;
    let mu: Vec<f64> = (0..n_assets).map(|_| rng.random_range(0.5..1.5)).collect();
    // L = √(cov/2)(I − P) + √cov·P with P = 𝟙𝟙ᵀ/N.
    let idio = libm::sqrt(0.5 * spec.cov);
    let common = libm::sqrt(spec.cov);
    let mut returns = Matrix::zeros(spec.n_slots, n_assets);
    for i in 0..spec.n_slots {
        let xi: Vec<f64> = (0..n_assets).map(|_| rng.sample(StandardNormal)).collect();
        let mean_xi = xi.iter().sum::<f64>() / n_assets as f64;
        for (k, row_val) in returns.row_mut(i).iter_mut().enumerate() {
            *row_val = mu[k] + idio * (xi[k] - mean_xi) + common * mean_xi;
        }
    }
    Ok(returns)
}

/// Portfolio problem with the ridge term split off as `R(ω)` under the
/// consensus constraint `x − ω = 0`.
pub fn portfolio_problem(returns: Matrix, mu_r: f64) -> Result<(CompositionProblem, ConstraintSpec)> {
    let oracle = Portfolio::new(returns)?;
    let smoothness = oracle.smoothness();
    let q = oracle.dim_x();
    let problem = CompositionProblem::new(oracle).with_smoothness(smoothness);
    let constraint = ConstraintSpec::new(
        Matrix::identity(q),
        Matrix::scaled_identity(q, -1.0),
        Regularizer::ScaledSquaredNorm { mu: mu_r },
    )?;
    Ok((problem, constraint))
}

pub fn gen_portfolio(spec: &PortfolioSpec) -> Result<(CompositionProblem, ConstraintSpec)> {
    portfolio_problem(simulate_returns(spec)?, spec.mu_r)
}
