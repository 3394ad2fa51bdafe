//! On-policy evaluation by Bellman-residual minimization with linear
//! features, as a composition with a non-uniform inner distribution.
//!
//! `g_{s'}(w) = (φ₁ᵀw, r_{1,s'} + γφ_{s'}ᵀw, …, φ_Sᵀw, r_{S,s'} + γφ_{s'}ᵀw)`,
//! `f_s(y) = (y[2s] − y[2s+1])²` (zero-based), the inner index s′ drawn
//! from the transition distribution and the outer index s uniform, so
//! `F(w) = (1/S) Σ_s (φ_sᵀw − Σ_{s'} P_{s'}(r_{s,s'} + γφ_{s'}ᵀw))²`.
//!
//! The composition has a single inner distribution, so the transition
//! matrix is generated with identical rows (a mixing distribution).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::vector::{dist, dot, norm, norm_sq};
use crate::linalg::{spectral_bounds, Matrix};
use crate::problem::{
    Composition, CompositionProblem, ConstraintSpec, Regularizer, Smoothness, Weights,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyEvalSpec {
    pub n_states: usize,
    /// Feature dimension d.
    pub dim: usize,
    pub gamma: f64,
    pub mu_r: f64,
    pub seed: u64,
}

impl PolicyEvalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.dim == 0 {
            return Err(Error::Config("policy evaluation needs states and features".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("discount must lie in [0, 1), got {}", self.gamma)));
        }
        if !(self.mu_r >= 0.0 && self.mu_r.is_finite()) {
            return Err(Error::Config(format!("mu_R must be >= 0, got {}", self.mu_r)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PolicyEval {
    /// S × d
    features: Matrix,
    /// `rewards[(s, s')]`
    rewards: Matrix,
    transition: Vec<f64>,
    gamma: f64,
}

impl PolicyEval {
    pub fn new(features: Matrix, rewards: Matrix, transition: Vec<f64>, gamma: f64) -> Result<Self> {
        let s = features.rows();
        if s == 0 || features.cols() == 0 {
            return Err(Error::Config("feature matrix is empty".into()));
        }
        if rewards.shape() != (s, s) {
            return Err(Error::Shape {
                what: "reward matrix (S x S)",
                expected: s * s,
                got: rewards.rows() * rewards.cols(),
            });
        }
        if transition.len() != s {
            return Err(Error::Shape {
                what: "transition distribution",
                expected: s,
                got: transition.len(),
            });
        }
        // Validates nonnegativity and normalization.
        Weights::new(transition.clone())?;
        Ok(Self {
            features,
            rewards,
            transition,
            gamma,
        })
    }

    pub fn states(&self) -> usize {
        self.features.rows()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn rewards(&self) -> &Matrix {
        &self.rewards
    }

    pub fn transition(&self) -> &[f64] {
        &self.transition
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `Σ_{s'} P_{s'} φ_{s'}`
    fn mean_feature(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.features.cols()];
        for (sp, p) in self.transition.iter().enumerate() {
            for (o, f) in out.iter_mut().zip(self.features.row(sp)) {
                *o += p * f;
            }
        }
        out
    }

    /// `(1/S) Σ_s (φ_sᵀw − Σ_{s'} P_{s,s'}(r_{s,s'} + γφ_{s'}ᵀw))²` evaluated
    /// directly.
    pub fn direct_objective(&self, w: &[f64]) -> f64 {
        let s_count = self.states();
        let values: Vec<f64> = (0..s_count).map(|s| dot(self.features.row(s), w)).collect();
        let mut total = 0.0;
        for s in 0..s_count {
            let mut expected = 0.0;
            for sp in 0..s_count {
                expected += self.transition[sp] * (self.rewards[(s, sp)] + self.gamma * values[sp]);
            }
            let resid = values[s] - expected;
            total += resid * resid;
        }
        total / s_count as f64
    }

    /// Hessian of F: `(2/S) Σ_s (φ_s − γφ̄)(φ_s − γφ̄)ᵀ`.
    pub fn hessian(&self) -> Matrix {
        let s_count = self.states();
        let phi_bar = self.mean_feature();
        let diff = Matrix::from_fn(s_count, self.features.cols(), |s, k| {
            self.features[(s, k)] - self.gamma * phi_bar[k]
        });
        let mut h = diff.gram();
        h.scale(2.0 / s_count as f64);
        h
    }

    pub fn smoothness(&self) -> Smoothness {
        let s_count = self.states();
        let phi_bar = self.mean_feature();
        let shifted: Vec<Vec<f64>> = (0..s_count)
            .map(|s| {
                self.features
                    .row(s)
                    .iter()
                    .zip(&phi_bar)
                    .map(|(f, b)| f - self.gamma * b)
                    .collect()
            })
            .collect();
        let mut l_big_f: f64 = 0.0;
        let mut c_g_sq: f64 = 0.0;
        let feature_sq: f64 = (0..s_count).map(|s| norm_sq(self.features.row(s))).sum();
        for s in 0..s_count {
            let phi_s = self.features.row(s);
            for sp in 0..s_count {
                let phi_sp: Vec<f64> = self.features.row(sp).iter().map(|f| self.gamma * f).collect();
                l_big_f = l_big_f.max(2.0 * dist(phi_s, &phi_sp) * norm(&shifted[s]));
            }
            let gp = self.gamma * norm(phi_s);
            c_g_sq = c_g_sq.max(feature_sq + s_count as f64 * gp * gp);
        }
        let mu_f = spectral_bounds(&self.hessian()).ok().map(|(_, lo)| lo).filter(|v| *v > 0.0);
        Smoothness {
            l_big_f: (l_big_f > 0.0).then_some(l_big_f),
            l_small_f: Some(4.0),
            c_g: Some(libm::sqrt(c_g_sq)),
            l_g: None,
            mu_f,
        }
    }
}

impl Composition for PolicyEval {
    fn dim_x(&self) -> usize {
        self.features.cols()
    }

    fn dim_y(&self) -> usize {
        2 * self.states()
    }

    fn inner_count(&self) -> usize {
        self.states()
    }

    fn outer_count(&self) -> usize {
        self.states()
    }

    fn inner_value(&self, j: usize, w: &[f64], out: &mut [f64]) {
        let next_value = self.gamma * dot(self.features.row(j), w);
        for s in 0..self.states() {
            out[2 * s] = dot(self.features.row(s), w);
            out[2 * s + 1] = self.rewards[(s, j)] + next_value;
        }
    }

    fn inner_jacobian(&self, j: usize, _w: &[f64], out: &mut Matrix) {
        for s in 0..self.states() {
            out.row_mut(2 * s).copy_from_slice(self.features.row(s));
            for (o, f) in out.row_mut(2 * s + 1).iter_mut().zip(self.features.row(j)) {
                *o = self.gamma * f;
            }
        }
    }

    fn inner_jacobian_tr_mul(&self, j: usize, _w: &[f64], v: &[f64], alpha: f64, out: &mut [f64]) {
        let mut next_coef = 0.0;
        for s in 0..self.states() {
            let c = alpha * v[2 * s];
            if c != 0.0 {
                for (o, f) in out.iter_mut().zip(self.features.row(s)) {
                    *o += c * f;
                }
            }
            next_coef += v[2 * s + 1];
        }
        let c = alpha * self.gamma * next_coef;
        for (o, f) in out.iter_mut().zip(self.features.row(j)) {
            *o += c * f;
        }
    }

    fn outer_value(&self, i: usize, y: &[f64]) -> f64 {
        let d = y[2 * i] - y[2 * i + 1];
        d * d
    }

    fn outer_gradient(&self, i: usize, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let d = 2.0 * (y[2 * i] - y[2 * i + 1]);
        out[2 * i] = d;
        out[2 * i + 1] = -d;
    }
}

/// Random instance: standard normal features, rewards uniform in [0, 1],
/// and a random mixing distribution normalized to sum to one.
pub fn simulate_policy_eval(spec: &PolicyEvalSpec) -> Result<PolicyEval> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let s = spec.n_states;
    let features = Matrix::from_fn(s, spec.dim, |_, _| rng.sample(StandardNormal));
    let rewards = Matrix::from_fn(s, s, |_, _| rng.random::<f64>());
    let raw: Vec<f64> = (0..s).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut transition: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let head: f64 = transition[..s - 1].iter().sum();
    transition[s - 1] = 1.0 - head;
    PolicyEval::new(features, rewards, transition, spec.gamma)
}

/// Problem with uniform outer weights `1/S`, the transition distribution
/// on the inner index, and `R(ω) = (μ/2)‖ω‖²` under `w − ω = 0`.
pub fn policy_eval_problem(oracle: PolicyEval, mu_r: f64) -> Result<(CompositionProblem, ConstraintSpec)> {
    let smoothness = oracle.smoothness();
    let inner = Weights::new(oracle.transition.clone())?;
    let outer = Weights::uniform(oracle.states());
    let d = oracle.dim_x();
    let problem = CompositionProblem::with_weights(oracle, inner, outer)?.with_smoothness(smoothness);
    let constraint = ConstraintSpec::new(
        Matrix::identity(d),
        Matrix::scaled_identity(d, -1.0),
        Regularizer::ScaledSquaredNorm { mu: mu_r },
    )?;
    Ok((problem, constraint))
}

pub fn gen_policy_eval(spec: &PolicyEvalSpec) -> Result<(CompositionProblem, ConstraintSpec)> {
    policy_eval_problem(simulate_policy_eval(spec)?, spec.mu_r)
}
