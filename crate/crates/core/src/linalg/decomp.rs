use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::matrix::Matrix;
use super::vector::{dot, norm};
use crate::error::{check_finite, check_len, Error, Result};

/// Lower-triangular Cholesky factor `M = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn factor(m: &Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape {
                what: "cholesky input (square)",
                expected: m.rows(),
                got: m.cols(),
            });
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("cholesky input"));
        }
        let n = m.rows();
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = m[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let d = libm::sqrt(d);
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        debug_assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }
}

/// Factorization of `M = cI + ρ·AᵀA` for the x-subproblem normal equations.
#[derive(Debug, Clone)]
pub struct FactoredSpd {
    c: f64,
    rho: f64,
    chol: Cholesky,
}

impl FactoredSpd {
    /// `gram` must be `AᵀA`.
    pub fn new(c: f64, rho: f64, gram: &Matrix) -> Result<Self> {
        if !(c.is_finite() && rho.is_finite()) {
            return Err(Error::NonFinite("spd parameters"));
        }
        if c <= 0.0 || rho < 0.0 {
            return Err(Error::Precondition(format!(
                "spd solve requires c > 0 and rho >= 0 (c = {c}, rho = {rho})"
            )));
        }
        let mut m = gram.clone();
        m.scale(rho);
        for i in 0..m.rows() {
            m[(i, i)] += c;
        }
        Ok(Self {
            c,
            rho,
            chol: Cholesky::factor(&m)?,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn dim(&self) -> usize {
        self.chol.dim()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len("spd right-hand side", self.dim(), b.len())?;
        check_finite("spd right-hand side", b)?;
        Ok(self.chol.solve(b))
    }
}

/// Holds `AᵀA` and refactors `cI + ρAᵀA` only when `(c, ρ)` change.
#[derive(Debug, Clone)]
pub struct SpdCache {
    gram: Matrix,
    current: Option<FactoredSpd>,
    refactorizations: usize,
}

impl SpdCache {
    pub fn new(a: &Matrix) -> Self {
        Self::from_gram(a.gram())
    }

    pub fn from_gram(gram: Matrix) -> Self {
        Self {
            gram,
            current: None,
            refactorizations: 0,
        }
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    /// Number of factorizations performed so far.
    pub fn refactorizations(&self) -> usize {
        self.refactorizations
    }

    pub fn solve(&mut self, c: f64, rho: f64, b: &[f64]) -> Result<Vec<f64>> {
        let stale = match &self.current {
            Some(f) => f.c != c || f.rho != rho,
            None => true,
        };
        if stale {
            self.current = Some(FactoredSpd::new(c, rho, &self.gram)?);
            self.refactorizations += 1;
        }
        self.current.as_ref().expect("factor present").solve(b)
    }
}

/// Solves `(cI + ρAᵀA)x = b`.
pub fn solve_spd(c: f64, rho: f64, a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    check_len("spd right-hand side", a.cols(), b.len())?;
    if !a.is_finite() {
        return Err(Error::NonFinite("constraint matrix"));
    }
    FactoredSpd::new(c, rho, &a.gram())?.solve(b)
}

/// Eigen-decomposition of a symmetric matrix (cyclic Jacobi).
/// Eigenvalues are sorted descending; `vectors` holds eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

const JACOBI_MAX_SWEEPS: usize = 100;

impl SymmetricEigen {
    pub fn new(m: &Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Contract(format!(
                "eigen-decomposition needs a square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        if !m.is_finite() {
            return Err(Error::NonFinite("eigen input"));
        }
        if !m.is_symmetric(1e-12) {
            return Err(Error::Contract("eigen-decomposition needs a symmetric matrix".into()));
        }
        let n = m.rows();
        let mut a = m.clone();
        let mut v = Matrix::identity(n);
        let scale = f64::max(a.frobenius(), f64::MIN_POSITIVE);
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut off = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
            if libm::sqrt(off) <= 1e-17 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq.abs() <= f64::MIN_POSITIVE {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / libm::sqrt(t * t + 1.0);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
        let values = order.iter().map(|&i| a[(i, i)]).collect();
        let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
        Ok(Self { values, vectors })
    }
}

/// Largest and smallest eigenvalue of a symmetric matrix.
pub fn spectral_bounds(m: &Matrix) -> Result<(f64, f64)> {
    if m.is_empty() {
        return Err(Error::Shape {
            what: "spectral bounds input",
            expected: 1,
            got: 0,
        });
    }
    let eig = SymmetricEigen::new(m)?;
    Ok((eig.values[0], *eig.values.last().expect("non-empty")))
}

/// Thin SVD `A = U diag(σ) Vᵀ` via one-sided Jacobi.
/// Singular values are sorted descending; `u` is rows×k and `v` is cols×k
/// with k = min(rows, cols).
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub singular_values: Vec<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn new(a: &Matrix) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::Shape {
                what: "svd input",
                expected: 1,
                got: 0,
            });
        }
        if !a.is_finite() {
            return Err(Error::NonFinite("svd input"));
        }
        if a.rows() >= a.cols() {
            Ok(Self::tall(a))
        } else {
            let t = Self::tall(&a.transpose());
            Ok(Self {
                u: t.v,
                singular_values: t.singular_values,
                v: t.u,
            })
        }
    }

    fn tall(a: &Matrix) -> Self {
        let (m, n) = a.shape();
        // Columns of `w` converge to U·diag(σ).
        let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
        let mut v: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                e
            })
            .collect();
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let alpha = dot(&w[p], &w[p]);
                    let beta = dot(&w[q], &w[q]);
                    let gamma = dot(&w[p], &w[q]);
                    if gamma == 0.0 || gamma.abs() <= 1e-15 * libm::sqrt(alpha * beta) {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                    let t = if zeta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / libm::sqrt(1.0 + t * t);
                    let s = c * t;
                    rotate(&mut w, p, q, c, s);
                    rotate(&mut v, p, q, c, s);
                }
            }
            if !rotated {
                break;
            }
        }
        let sigma: Vec<f64> = w.iter().map(|c| norm(c)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
        let mut u = Matrix::zeros(m, n);
        let mut vm = Matrix::zeros(n, n);
        let mut singular_values = Vec::with_capacity(n);
        for (col, &idx) in order.iter().enumerate() {
            let s = sigma[idx];
            singular_values.push(s);
            for r in 0..m {
                u[(r, col)] = if s > 0.0 { w[idx][r] / s } else { 0.0 };
            }
            for r in 0..n {
                vm[(r, col)] = v[idx][r];
            }
        }
        Self {
            u,
            singular_values,
            v: vm,
        }
    }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let x = *a;
        let y = *b;
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Default relative cutoff for [`pseudoinverse`].
pub const PINV_DEFAULT_TOL: f64 = 1e-12;

/// Moore–Penrose pseudoinverse. Singular values at or below `tol·σ_max`
/// are treated as zero.
pub fn pseudoinverse(a: &Matrix, tol: f64) -> Result<Matrix> {
    if tol < 0.0 || tol.is_nan() {
        return Err(Error::Precondition("pseudoinverse tolerance must be >= 0".into()));
    }
    let svd = Svd::new(a)?;
    let cutoff = tol * svd.singular_values.first().copied().unwrap_or(0.0);
    let mut out = Matrix::zeros(a.cols(), a.rows());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let inv = 1.0 / s;
        for i in 0..a.cols() {
            let vi = svd.v[(i, k)] * inv;
            if vi == 0.0 {
                continue;
            }
            for j in 0..a.rows() {
                out[(i, j)] += vi * svd.u[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    Ok(Svd::new(a)?.singular_values[0])
}

/// Numerical rank using the same relative cutoff convention as [`pseudoinverse`].
pub fn rank(a: &Matrix, tol: f64) -> Result<usize> {
    let svd = Svd::new(a)?;
    let cutoff = tol * svd.singular_values[0];
    Ok(svd
        .singular_values
        .iter()
        .filter(|&&s| s > cutoff && s > 0.0)
        .count())
}
