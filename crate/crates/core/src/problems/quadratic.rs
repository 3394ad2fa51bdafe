//! Synthetic strongly convex (or rank-deficient convex) quadratic with a
//! closed-form primal-dual optimum.
//!
//! `gⱼ(x) = Cⱼx + dⱼ` with `Σⱼ Cⱼ/4 = Uᵀ`, `fᵢ(y) = ½yᵀHᵢy + hᵢᵀy` with
//! diagonal `Hᵢ` averaging to `diag(λ)`, so that
//! `F(x) = ½xᵀQx + bᵀx + const` with `Q = U diag(λ) Uᵀ`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::vector::{axpy, dot, norm};
use crate::linalg::{pseudoinverse, rank, spectral_norm, Matrix, PINV_DEFAULT_TOL};
use crate::problem::{
    Composition, CompositionProblem, ConstraintSpec, OracleLedger, Regularizer, Smoothness,
};
use crate::solver::ReferenceSolution;

/// Number of inner and outer components.
pub const COMPONENTS: usize = 4;
const SPREAD: [f64; COMPONENTS] = [0.5, 1.5, 0.75, 1.25];
const MAX_ATTEMPTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSpec {
    pub q: usize,
    /// Constraint rows; 0 gives an unconstrained instance.
    pub p: usize,
    /// Ratio of the largest to the smallest nonzero eigenvalue of Q.
    pub condition: f64,
    pub mu_r: f64,
    /// Rank of Q; `None` means full rank.
    pub rank: Option<usize>,
    /// Scale of the offsets `dⱼ`, `hᵢ`; 0 gives `b = 0`.
    pub offset_scale: f64,
    /// Smallest nonzero eigenvalue of Q.
    pub curvature: f64,
    pub seed: u64,
}

impl QuadraticSpec {
    pub fn new(q: usize, p: usize, condition: f64, seed: u64) -> Self {
        Self {
            q,
            p,
            condition,
            mu_r: 0.1,
            rank: None,
            offset_scale: 1.0,
            curvature: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::Config("q must be positive".into()));
        }
        if self.p > self.q {
            return Err(Error::Config(format!("p = {} exceeds q = {}", self.p, self.q)));
        }
        if !(self.condition >= 1.0 && self.condition.is_finite()) {
            return Err(Error::Config(format!("condition must be >= 1, got {}", self.condition)));
        }
        if !(self.mu_r >= 0.0 && self.mu_r.is_finite()) {
            return Err(Error::Config(format!("mu_R must be >= 0, got {}", self.mu_r)));
        }
        if let Some(r) = self.rank {
            if r == 0 || r > self.q {
                return Err(Error::Config(format!("rank must lie in 1..={}, got {r}", self.q)));
            }
        }
        if !(self.curvature > 0.0 && self.curvature.is_finite()) {
            return Err(Error::Config("curvature must be > 0".into()));
        }
        if !(self.offset_scale >= 0.0 && self.offset_scale.is_finite()) {
            return Err(Error::Config("offset_scale must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Quadratic {
    inner_maps: Vec<Matrix>,
    inner_offsets: Vec<Vec<f64>>,
    /// Diagonals of `Hᵢ`.
    outer_curv: Vec<Vec<f64>>,
    outer_lin: Vec<Vec<f64>>,
}

impl Composition for Quadratic {
    fn dim_x(&self) -> usize {
        self.inner_maps[0].cols()
    }

    fn dim_y(&self) -> usize {
        self.inner_maps[0].rows()
    }

    fn inner_count(&self) -> usize {
        self.inner_maps.len()
    }

    fn outer_count(&self) -> usize {
        self.outer_curv.len()
    }

    fn inner_value(&self, j: usize, x: &[f64], out: &mut [f64]) {
        self.inner_maps[j].mul_vec_into(x, out);
        for (o, d) in out.iter_mut().zip(&self.inner_offsets[j]) {
            *o += d;
        }
    }

    fn inner_jacobian(&self, j: usize, _x: &[f64], out: &mut Matrix) {
        *out = self.inner_maps[j].clone();
    }

    fn inner_jacobian_tr_mul(&self, j: usize, _x: &[f64], v: &[f64], alpha: f64, out: &mut [f64]) {
        self.inner_maps[j].tr_mul_vec_acc(alpha, v, out);
    }

    fn outer_value(&self, i: usize, y: &[f64]) -> f64 {
        let h = &self.outer_curv[i];
        let quad: f64 = y.iter().zip(h).map(|(v, c)| c * v * v).sum();
        0.5 * quad + dot(&self.outer_lin[i], y)
    }

    fn outer_gradient(&self, i: usize, y: &[f64], out: &mut [f64]) {
        for (((o, v), c), l) in out.iter_mut().zip(y).zip(&self.outer_curv[i]).zip(&self.outer_lin[i]) {
            *o = c * v + l;
        }
    }
}

/// A generated instance together with its analytic optimum.
#[derive(Debug)]
pub struct QuadraticInstance {
    pub problem: CompositionProblem,
    pub constraint: ConstraintSpec,
    pub optimum: ReferenceSolution,
    /// Q
    pub hessian: Matrix,
    /// b
    pub linear: Vec<f64>,
}

/// Haar-like orthogonal matrix from Gram–Schmidt on a Gaussian matrix.
fn random_orthogonal<R: Rng>(q: usize, rng: &mut R) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(q);
    while cols.len() < q {
        let mut v: Vec<f64> = (0..q).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for c in &cols {
                let proj = dot(c, &v);
                axpy(-proj, c, &mut v);
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            v.iter_mut().for_each(|x| *x /= nv);
            cols.push(v);
        }
    }
    Matrix::from_fn(q, q, |r, c| cols[c][r])
}

fn gaussian_vec<R: Rng>(len: usize, scale: f64, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn centered<R: Rng>(count: usize, len: usize, scale: f64, rng: &mut R) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = (0..count).map(|_| gaussian_vec(len, scale, rng)).collect();
    let mut mean = vec![0.0; len];
    for v in &out {
        axpy(1.0 / count as f64, v, &mut mean);
    }
    for v in &mut out {
        axpy(-1.0, &mean, v);
    }
    out
}

pub fn gen_synthetic_quadratic(spec: &QuadraticSpec) -> Result<QuadraticInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let q = spec.q;
    let rank_q = spec.rank.unwrap_or(q);

    let u = random_orthogonal(q, &mut rng);
    let eig: Vec<f64> = (0..q)
        .map(|k| {
            if k >= rank_q {
                0.0
            } else if rank_q == 1 {
                spec.curvature
            } else {
                spec.curvature * libm::pow(spec.condition, k as f64 / (rank_q - 1) as f64)
            }
        })
        .collect();

    // Hᵢ = diag(λ ⊙ sᵢ), each coordinate's spreads a permutation of SPREAD.
    let mut outer_curv = vec![vec![0.0; q]; COMPONENTS];
    for (k, lam) in eig.iter().enumerate() {
        let mut s = SPREAD;
        s.shuffle(&mut rng);
        for (i, h) in outer_curv.iter_mut().enumerate() {
            h[k] = lam * s[i];
        }
    }

    let ut = u.transpose();
    let perturb = centered(COMPONENTS, q * q, 0.3 / libm::sqrt(q as f64), &mut rng);
    let inner_maps: Vec<Matrix> = perturb
        .iter()
        .map(|e| {
            let mut c = ut.clone();
            c.add_scaled(1.0, &Matrix::from_vec(q, q, e.clone()).expect("square perturbation"));
            c
        })
        .collect();

    let d_bar = gaussian_vec(q, spec.offset_scale, &mut rng);
    let mut h_bar = gaussian_vec(q, spec.offset_scale, &mut rng);
    // Zero linear terms along null(Q) keep F bounded below.
    for (h, lam) in h_bar.iter_mut().zip(&eig) {
        if *lam == 0.0 {
            *h = 0.0;
        }
    }
    let inner_offsets: Vec<Vec<f64>> = centered(COMPONENTS, q, spec.offset_scale, &mut rng)
        .into_iter()
        .map(|mut d| {
            axpy(1.0, &d_bar, &mut d);
            d
        })
        .collect();
    let outer_lin: Vec<Vec<f64>> = centered(COMPONENTS, q, spec.offset_scale, &mut rng)
        .into_iter()
        .map(|mut h| {
            axpy(1.0, &h_bar, &mut h);
            h
        })
        .collect();

    // Q = U diag(λ) Uᵀ,  b = U(diag(λ) d̄ + h̄)
    let hessian = Matrix::from_fn(q, q, |r, c| (0..q).map(|k| u[(r, k)] * eig[k] * u[(c, k)]).sum());
    let inner_lin: Vec<f64> = (0..q).map(|k| eig[k] * d_bar[k] + h_bar[k]).collect();
    let linear = u.mul_vec(&inner_lin);

    let mut a = Matrix::zeros(spec.p, q);
    let mut accepted = spec.p == 0;
    for _ in 0..MAX_ATTEMPTS {
        if accepted {
            break;
        }
        a = Matrix::from_fn(spec.p, q, |_, _| rng.sample(StandardNormal));
        accepted = rank(&a, 1e-10)? == spec.p;
    }
    if !accepted {
        return Err(Error::Precondition(format!(
            "no full-row-rank constraint after {MAX_ATTEMPTS} draws"
        )));
    }

    let oracle = Quadratic {
        inner_maps,
        inner_offsets,
        outer_curv,
        outer_lin,
    };
    let smoothness = quadratic_smoothness(&oracle, &eig, rank_q == q)?;
    let problem = CompositionProblem::new(oracle).with_smoothness(smoothness);
    let constraint = ConstraintSpec::new(
        a.clone(),
        Matrix::scaled_identity(spec.p, -1.0),
        Regularizer::ScaledSquaredNorm { mu: spec.mu_r },
    )?;

    // KKT: (Q + μAᵀA)x* = −b,  ω* = Ax*,  λ* = μω*.
    let mut system = a.gram();
    system.scale(spec.mu_r);
    system.add_scaled(1.0, &hessian);
    let x_star: Vec<f64> = pseudoinverse(&system, PINV_DEFAULT_TOL)?
        .mul_vec(&linear)
        .into_iter()
        .map(|v| -v)
        .collect();
    let omega_star = a.mul_vec(&x_star);
    let lambda_star: Vec<f64> = omega_star.iter().map(|w| spec.mu_r * w).collect();

    let mut scratch = OracleLedger::new();
    let grad = problem.full_gradient(&x_star, &mut scratch)?;
    let mut stationarity = grad.clone();
    a.tr_mul_vec_acc(1.0, &lambda_star, &mut stationarity);
    let residual = norm(&stationarity);
    let objective = problem.value(&x_star, &mut scratch)? + constraint.regularizer.value(&omega_star);

    Ok(QuadraticInstance {
        problem,
        constraint,
        optimum: ReferenceSolution {
            x: x_star,
            omega: omega_star,
            lambda: lambda_star,
            objective,
            residual,
            converged: residual <= 1e-8 * (1.0 + norm(&grad)),
        },
        hessian,
        linear,
    })
}

fn quadratic_smoothness(oracle: &Quadratic, eig: &[f64], full_rank: bool) -> Result<Smoothness> {
    let q = oracle.dim_x();
    let mut c_bar = Matrix::zeros(q, q);
    for c in &oracle.inner_maps {
        c_bar.add_scaled(1.0 / COMPONENTS as f64, c);
    }
    let mut l_big_f: f64 = 0.0;
    for h in &oracle.outer_curv {
        let hc = Matrix::from_fn(q, q, |r, c| h[r] * c_bar[(r, c)]);
        for c in &oracle.inner_maps {
            l_big_f = l_big_f.max(spectral_norm(&c.transpose().matmul(&hc))?);
        }
    }
    let l_small_f = oracle
        .outer_curv
        .iter()
        .flat_map(|h| h.iter().copied())
        .fold(0.0, f64::max);
    let mut c_g: f64 = 0.0;
    for c in &oracle.inner_maps {
        c_g = c_g.max(spectral_norm(c)?);
    }
    let mu_f = full_rank.then(|| eig.iter().copied().fold(f64::INFINITY, f64::min));
    Ok(Smoothness {
        l_big_f: Some(l_big_f),
        l_small_f: Some(l_small_f),
        c_g: Some(c_g),
        l_g: None,
        mu_f,
    })
}
