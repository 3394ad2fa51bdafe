use compadmm_core::linalg::{
    pseudoinverse, rank, solve_spd, spectral_bounds, theorem1_constants, Matrix, Svd, SymmetricEigen,
    Theorem1Params, PINV_DEFAULT_TOL,
};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// rows × cols with the requested rank.
fn low_rank(rows: usize, cols: usize, r: usize, rng: &mut impl Rng) -> Matrix {
    random(rows, r, rng).matmul(&random(r, cols, rng))
}

fn max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

#[test]
fn eigenvalues_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in [1, 2, 6, 15, 30] {
        let b = random(n, n, &mut rng);
        let mut spd = b.gram();
        spd.add_scaled(0.1, &Matrix::identity(n));
        let ours = SymmetricEigen::new(&spd).unwrap();
        let mut theirs: Vec<f64> = to_na(&spd).symmetric_eigenvalues().iter().copied().collect();
        theirs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (a, b) in ours.values.iter().zip(&theirs) {
            assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()), "n={n}: {a} vs {b}");
        }
        let (hi, lo) = spectral_bounds(&spd).unwrap();
        assert!((hi - theirs[0]).abs() <= 1e-8 * hi && (lo - theirs[n - 1]).abs() <= 1e-8 * hi);
        // eigenvectors reconstruct the matrix
        let v = to_na(&ours.vectors);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(ours.values.clone()));
        assert!(max_diff(&(&v * d * v.transpose()), &to_na(&spd)) <= 1e-9);
    }
}

#[test]
fn eigen_examples() {
    let d = Matrix::from_diag(&[1.0, 3.0]);
    assert_eq!(spectral_bounds(&d).unwrap(), (3.0, 1.0));
    assert_eq!(spectral_bounds(&Matrix::identity(2)).unwrap(), (1.0, 1.0));
    let ns = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
    assert!(SymmetricEigen::new(&ns).is_err());
}

#[test]
fn singular_values_match_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (r, c, k) in [(5, 3, 3), (3, 5, 3), (12, 12, 4), (50, 20, 20), (20, 50, 7), (50, 50, 10)] {
        let a = low_rank(r, c, k, &mut rng);
        let ours = Svd::new(&a).unwrap();
        let theirs = to_na(&a).svd(false, false).singular_values;
        let mut theirs: Vec<f64> = theirs.iter().copied().collect();
        theirs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let top = theirs[0];
        for (a, b) in ours.singular_values.iter().zip(&theirs) {
            assert!((a - b).abs() <= 1e-9 * top, "{r}x{c}: {a} vs {b}");
        }
        assert_eq!(rank(&a, 1e-10).unwrap(), k);
    }
}

#[test]
fn pseudoinverse_satisfies_penrose_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (r, c, k) in [(4, 4, 4), (6, 3, 2), (3, 8, 3), (20, 30, 12), (50, 50, 25), (40, 10, 10)] {
        let a = low_rank(r, c, k, &mut rng);
        let p = to_na(&pseudoinverse(&a, PINV_DEFAULT_TOL).unwrap());
        let a = to_na(&a);
        let scale = 1.0 + a.abs().max() * p.abs().max();
        assert!(max_diff(&(&a * &p * &a), &a) <= 1e-9 * scale);
        assert!(max_diff(&(&p * &a * &p), &p) <= 1e-9 * scale * p.abs().max());
        let ap = &a * &p;
        let pa = &p * &a;
        assert!(max_diff(&ap, &ap.transpose()) <= 1e-9 * scale);
        assert!(max_diff(&pa, &pa.transpose()) <= 1e-9 * scale);
        let oracle = a.clone().pseudo_inverse(1e-10).unwrap();
        assert!(max_diff(&p, &oracle) <= 1e-7 * (1.0 + oracle.abs().max()));
    }
}

#[test]
fn pseudoinverse_examples() {
    let i3 = Matrix::identity(3);
    assert!(pseudoinverse(&i3, PINV_DEFAULT_TOL).unwrap().sub(&i3).max_abs() < 1e-15);
    let two = Matrix::from_rows(&[vec![2.0]]);
    assert!((pseudoinverse(&two, PINV_DEFAULT_TOL).unwrap()[(0, 0)] - 0.5).abs() < 1e-15);
    let proj = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
    assert!(pseudoinverse(&proj, PINV_DEFAULT_TOL).unwrap().sub(&proj).max_abs() < 1e-15);
    assert!(pseudoinverse(&Matrix::zeros(0, 0), PINV_DEFAULT_TOL).is_err());
}

#[test]
fn spd_solve_examples() {
    let a = Matrix::from_rows(&[vec![3.0, 1.0], vec![-2.0, 4.0]]);
    assert_eq!(solve_spd(1.0, 0.0, &a, &[5.0, -3.0]).unwrap(), vec![5.0, -3.0]);
    let one = Matrix::from_rows(&[vec![1.0]]);
    assert!((solve_spd(1.0, 1.0, &one, &[-1.0]).unwrap()[0] + 0.5).abs() < 1e-15);
    assert!(solve_spd(1.0, 1.0, &one, &[f64::NAN]).is_err());
}

#[test]
fn spd_solve_residuals() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for t in 0..1000 {
        let (p, q) = (rng.random_range(1..8), rng.random_range(1..9));
        let a = random(p, q, &mut rng);
        let c = rng.random_range(0.01..10.0);
        let rho = rng.random_range(0.0..10.0);
        let b: Vec<f64> = (0..q).map(|_| rng.random_range(-5.0..5.0)).collect();
        let x = solve_spd(c, rho, &a, &b).unwrap();
        let mut lhs = a.gram();
        lhs.scale(rho);
        lhs.add_scaled(c, &Matrix::identity(q));
        let r: f64 = lhs.mul_vec(&x).iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        assert!(r <= 1e-10 * (1.0 + lhs.max_abs() * x.iter().fold(0.0f64, |m, v| m.max(v.abs()))), "case {t}: {r}");
    }
}

fn desk_params() -> Theorem1Params {
    Theorem1Params {
        eta: 1e-3,
        k: 10_000,
        n: 10,
        rho: 1.0,
        mu_f: 1.0,
        l_big_f: 2.0,
        l_small_f: 1.0,
        c_g: 1.0,
        l_g: 1.0,
        diameter: 0.01,
        ata_norm: 1.0,
        aat_sigma_min: 1.0,
    }
}

/// Straight transcription of the two constants.
fn gamma_pair(p: &Theorem1Params) -> (f64, f64) {
    let (eta, k, n) = (p.eta, p.k as f64, p.n as f64);
    let a = 32.0 * eta.powi(2) * p.c_g.powi(4) * p.l_small_f.powi(2) / (p.mu_f * n);
    let b = 48.0 * eta.powi(2) * p.l_big_f.powi(2) / p.mu_f;
    let c = 8.0 * eta * p.diameter * p.c_g * p.l_small_f * p.l_g / (n.sqrt() * p.mu_f);
    let g1 = 2.0 * eta * k - k * (a + b + c);
    let g2 = (k + 1.0) * (a + b + c)
        + 2.0 / p.mu_f
        + 2.0 * eta * p.rho * p.ata_norm / p.mu_f
        + 2.0 * p.l_big_f * eta / (p.rho * p.aat_sigma_min);
    (g1, g2)
}

#[test]
fn rate_constants_match_transcription() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let mut p = desk_params();
        p.l_big_f = rng.random_range(0.5..5.0);
        p.eta = rng.random_range(0.0..1.0) / p.l_big_f;
        p.k = rng.random_range(1..500);
        p.n = rng.random_range(1..20);
        p.mu_f = rng.random_range(0.1..2.0);
        p.diameter = rng.random_range(0.1..3.0);
        p.rho = rng.random_range(0.1..10.0);
        if p.eta <= 0.0 {
            continue;
        }
        let got = theorem1_constants(&p).unwrap();
        let (g1, g2) = gamma_pair(&p);
        assert!((got.gamma1 - g1).abs() <= 1e-12 * (1.0 + g1.abs()));
        assert!((got.gamma2 - g2).abs() <= 1e-12 * (1.0 + g2.abs()));
    }
}

#[test]
fn rate_constants_limits() {
    let mut p = desk_params();
    p.eta = 1e-18;
    assert!(theorem1_constants(&p).unwrap().gamma1.abs() < 1e-10);

    p.eta = 1.0;
    assert!(theorem1_constants(&p).is_err());

    let p = desk_params();
    let base = theorem1_constants(&p).unwrap();
    let mut doubled = p;
    doubled.k *= 2;
    let doubled = theorem1_constants(&doubled).unwrap();
    assert!((doubled.gamma1 - 2.0 * base.gamma1).abs() <= 1e-12 * base.gamma1.abs());
    assert!(base.linear_rate);
}

proptest! {
    #[test]
    fn gamma1_grows_with_eta_when_small(scale in 0.01f64..0.5) {
        let mut lo = desk_params();
        lo.eta = 1e-5 * scale;
        let mut hi = lo;
        hi.eta = 2.0 * lo.eta;
        prop_assert!(theorem1_constants(&hi).unwrap().gamma1 > theorem1_constants(&lo).unwrap().gamma1);
    }
}
