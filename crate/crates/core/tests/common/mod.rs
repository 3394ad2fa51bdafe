#![allow(dead_code)]

use compadmm_core::linalg::Matrix;
use compadmm_core::problems::{gen_policy_eval, gen_portfolio, gen_synthetic_quadratic, PolicyEvalSpec, PortfolioSpec, QuadraticSpec};
use compadmm_core::{Composition, CompositionProblem, ConstraintSpec, Weights};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Scalar maps `gⱼ(x) = aⱼ x^{pⱼ}` and `fᵢ(y) = bᵢ y + cᵢ y²`.
#[derive(Debug, Clone)]
pub struct Scalar {
    pub inner: Vec<(f64, i32)>,
    pub outer: Vec<(f64, f64)>,
}

impl Composition for Scalar {
    fn dim_x(&self) -> usize {
        1
    }
    fn dim_y(&self) -> usize {
        1
    }
    fn inner_count(&self) -> usize {
        self.inner.len()
    }
    fn outer_count(&self) -> usize {
        self.outer.len()
    }
    fn inner_value(&self, j: usize, x: &[f64], out: &mut [f64]) {
        let (a, p) = self.inner[j];
        out[0] = a * x[0].powi(p);
    }
    fn inner_jacobian(&self, j: usize, x: &[f64], out: &mut Matrix) {
        let (a, p) = self.inner[j];
        out[(0, 0)] = if p == 0 { 0.0 } else { a * p as f64 * x[0].powi(p - 1) };
    }
    fn outer_value(&self, i: usize, y: &[f64]) -> f64 {
        let (b, c) = self.outer[i];
        b * y[0] + c * y[0] * y[0]
    }
    fn outer_gradient(&self, i: usize, y: &[f64], out: &mut [f64]) {
        let (b, c) = self.outer[i];
        out[0] = b + 2.0 * c * y[0];
    }
}

pub fn scalar(inner: &[(f64, i32)], outer: &[(f64, f64)]) -> CompositionProblem {
    CompositionProblem::new(Scalar {
        inner: inner.to_vec(),
        outer: outer.to_vec(),
    })
}

/// `gⱼ(x) = x` in ℝ^q with `fᵢ ≡ 0`.
#[derive(Debug, Clone)]
pub struct Identity {
    pub q: usize,
    pub m: usize,
    pub n: usize,
}

impl Composition for Identity {
    fn dim_x(&self) -> usize {
        self.q
    }
    fn dim_y(&self) -> usize {
        self.q
    }
    fn inner_count(&self) -> usize {
        self.m
    }
    fn outer_count(&self) -> usize {
        self.n
    }
    fn inner_value(&self, _j: usize, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn inner_jacobian(&self, _j: usize, _x: &[f64], out: &mut Matrix) {
        *out = Matrix::identity(self.q);
    }
    fn outer_value(&self, _i: usize, _y: &[f64]) -> f64 {
        0.0
    }
    fn outer_gradient(&self, _i: usize, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }
}

/// Nonlinear test composition: `gⱼ(x) = tanh(Wⱼx + cⱼ)` and
/// `fᵢ(y) = log(1 + exp(uᵢᵀy)) + ½aᵢ‖y‖²`.
#[derive(Debug, Clone)]
pub struct Smooth {
    pub w: Vec<Matrix>,
    pub c: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub a: Vec<f64>,
}

impl Smooth {
    pub fn random(q: usize, r: usize, m: usize, n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = |s: f64| rng.random_range(-s..s);
        Self {
            w: (0..m).map(|_| Matrix::from_fn(r, q, |_, _| g(0.8))).collect(),
            c: (0..m).map(|_| (0..r).map(|_| g(0.5)).collect()).collect(),
            u: (0..n).map(|_| (0..r).map(|_| g(1.0)).collect()).collect(),
            a: (0..n).map(|_| 0.5 + g(0.4)).collect(),
        }
    }
}

impl Composition for Smooth {
    fn dim_x(&self) -> usize {
        self.w[0].cols()
    }
    fn dim_y(&self) -> usize {
        self.w[0].rows()
    }
    fn inner_count(&self) -> usize {
        self.w.len()
    }
    fn outer_count(&self) -> usize {
        self.u.len()
    }
    fn inner_value(&self, j: usize, x: &[f64], out: &mut [f64]) {
        self.w[j].mul_vec_into(x, out);
        for (o, c) in out.iter_mut().zip(&self.c[j]) {
            *o = (*o + c).tanh();
        }
    }
    fn inner_jacobian(&self, j: usize, x: &[f64], out: &mut Matrix) {
        let z = self.w[j].mul_vec(x);
        for r in 0..self.dim_y() {
            let d = 1.0 - (z[r] + self.c[j][r]).tanh().powi(2);
            for k in 0..self.dim_x() {
                out[(r, k)] = d * self.w[j][(r, k)];
            }
        }
    }
    fn outer_value(&self, i: usize, y: &[f64]) -> f64 {
        let t: f64 = self.u[i].iter().zip(y).map(|(a, b)| a * b).sum();
        (1.0 + t.exp()).ln() + 0.5 * self.a[i] * y.iter().map(|v| v * v).sum::<f64>()
    }
    fn outer_gradient(&self, i: usize, y: &[f64], out: &mut [f64]) {
        let t: f64 = self.u[i].iter().zip(y).map(|(a, b)| a * b).sum();
        let s = 1.0 / (1.0 + (-t).exp());
        for ((o, u), v) in out.iter_mut().zip(&self.u[i]).zip(y) {
            *o = s * u + self.a[i] * v;
        }
    }
}

/// The nonlinear composition with random non-uniform weights.
pub fn smooth_weighted(q: usize, r: usize, m: usize, n: usize, seed: u64) -> CompositionProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
    let mut weights = |k: usize| {
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let head: f64 = w[..k - 1].iter().sum();
        w[k - 1] = 1.0 - head;
        Weights::new(w).unwrap()
    };
    let inner = weights(m);
    let outer = weights(n);
    CompositionProblem::with_weights(Smooth::random(q, r, m, n, seed), inner, outer).unwrap()
}

pub fn random_point(q: usize, scale: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..q).map(|_| rng.random_range(-scale..scale)).collect()
}

/// One instance from each generator, small enough for exhaustive checks.
pub fn generated() -> Vec<(&'static str, CompositionProblem, ConstraintSpec)> {
    let (pp, pc) = gen_portfolio(&PortfolioSpec {
        n_assets: 5,
        n_slots: 12,
        cov: 2.0,
        mu_r: 0.1,
        seed: 3,
    })
    .unwrap();
    let (ep, ec) = gen_policy_eval(&PolicyEvalSpec {
        n_states: 6,
        dim: 4,
        gamma: 0.9,
        mu_r: 0.1,
        seed: 5,
    })
    .unwrap();
    let quad = gen_synthetic_quadratic(&QuadraticSpec::new(6, 2, 10.0, 9)).unwrap();
    vec![
        ("portfolio", pp, pc),
        ("policy", ep, ec),
        ("quadratic", quad.problem, quad.constraint),
    ]
}

pub fn assert_close(a: &[f64], b: &[f64], tol: f64) {
    assert_eq!(a.len(), b.len(), "length mismatch");
    for (k, (x, y)) in a.iter().zip(b).enumerate() {
        assert!((x - y).abs() <= tol, "entry {k}: {x} vs {y} (tol {tol})");
    }
}
