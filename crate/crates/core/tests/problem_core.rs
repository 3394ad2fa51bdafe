mod common;

use common::*;
use compadmm_core::linalg::Matrix;
use compadmm_core::problems::portfolio_problem;
use compadmm_core::{objective, CompositionProblem, ConstraintSpec, Error, OracleLedger, Regularizer, Weights};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toy() -> (CompositionProblem, ConstraintSpec) {
    let returns = Matrix::from_rows(&[vec![1.0], vec![3.0]]);
    let (p, mut c) = portfolio_problem(returns, 0.0).unwrap();
    c.regularizer = Regularizer::None;
    (p, c)
}

#[test]
fn identity_inner_value_and_jacobian() {
    let p = CompositionProblem::new(Identity { q: 2, m: 1, n: 1 });
    let mut ledger = OracleLedger::new();
    let (v, j) = p.eval_inner(0, &[1.0, 2.0], &mut ledger).unwrap();
    assert_eq!(v, vec![1.0, 2.0]);
    assert_eq!(j, Matrix::identity(2));
    assert_eq!(ledger.inner_value_queries, 1);
    assert_eq!(ledger.inner_jacobian_queries, 1);
    assert_eq!(ledger.query_total(), 1);
}

#[test]
fn square_inner_map() {
    let p = scalar(&[(1.0, 2)], &[(1.0, 0.0)]);
    let mut ledger = OracleLedger::new();
    let (v, j) = p.eval_inner(0, &[2.0], &mut ledger).unwrap();
    assert_eq!(v, vec![4.0]);
    assert_eq!(j[(0, 0)], 4.0);
    let v = p.eval_inner_value(0, &[2.0], &mut ledger).unwrap();
    assert_eq!(v, vec![4.0]);
    assert_eq!((ledger.inner_value_queries, ledger.inner_jacobian_queries), (2, 1));
}

#[test]
fn portfolio_inner_map_stacks_return() {
    let (p, _) = toy();
    let mut ledger = OracleLedger::new();
    let (v, _) = p.eval_inner(0, &[1.0], &mut ledger).unwrap();
    assert_eq!(v, vec![1.0, 1.0]);
}

#[test]
fn eval_inner_rejects_bad_input() {
    let p = scalar(&[(1.0, 1)], &[(1.0, 0.0)]);
    let mut ledger = OracleLedger::new();
    assert!(matches!(p.eval_inner(1, &[1.0], &mut ledger), Err(Error::Index { .. })));
    assert!(matches!(p.eval_inner(0, &[1.0, 2.0], &mut ledger), Err(Error::Shape { .. })));
    assert_eq!(ledger.total(), 0);
}

#[test]
fn mean_inner_examples() {
    let mut ledger = OracleLedger::new();
    let same = CompositionProblem::with_weights(
        Identity { q: 1, m: 3, n: 1 },
        Weights::new(vec![0.2, 0.3, 0.5]).unwrap(),
        Weights::uniform(1),
    )
    .unwrap();
    assert_eq!(same.mean_inner(&[3.0], &mut ledger).unwrap(), vec![3.0]);
    assert_eq!(ledger.inner_value_queries, 3);

    let two = scalar(&[(1.0, 1), (2.0, 1)], &[(1.0, 0.0)]);
    assert_eq!(two.mean_inner(&[1.0], &mut ledger).unwrap(), vec![1.5]);

    let weighted = CompositionProblem::with_weights(
        common::Scalar {
            inner: vec![(1.0, 1), (2.0, 1)],
            outer: vec![(1.0, 0.0)],
        },
        Weights::new(vec![0.25, 0.75]).unwrap(),
        Weights::uniform(1),
    )
    .unwrap();
    assert_eq!(weighted.mean_inner(&[1.0], &mut ledger).unwrap(), vec![1.75]);
}

#[test]
fn weights_are_validated() {
    assert!(Weights::new(vec![0.5, 0.6]).is_err());
    assert!(Weights::new(vec![-0.5, 1.5]).is_err());
    assert!(Weights::new(vec![]).is_err());
    assert!(Weights::new(vec![0.25, 0.75]).is_ok());
}

#[test]
fn weighted_sampling_matches_probabilities() {
    let w = Weights::new(vec![0.1, 0.6, 0.3]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut counts = [0usize; 3];
    let draws = 60_000;
    for _ in 0..draws {
        counts[w.sample(&mut rng)] += 1;
    }
    for (c, p) in counts.iter().zip([0.1, 0.6, 0.3]) {
        assert!((*c as f64 / draws as f64 - p).abs() < 0.01);
    }
}

#[test]
fn full_gradient_on_portfolio_toy() {
    // F(x) = x² − 2x
    let (p, _) = toy();
    let mut ledger = OracleLedger::new();
    assert!(p.full_gradient(&[1.0], &mut ledger).unwrap()[0].abs() < 1e-14);
    assert!((p.full_gradient(&[0.0], &mut ledger).unwrap()[0] + 2.0).abs() < 1e-14);
    // m = n = 2, counted as m + n queries per call
    assert_eq!(ledger.query_total(), 8);
    assert_eq!(ledger.outer_gradient_queries, 4);
    assert_eq!(ledger.inner_jacobian_queries, 4);
}

#[test]
fn constant_outer_functions_have_zero_gradient() {
    let p = scalar(&[(1.0, 3), (2.0, 2)], &[(0.0, 0.0), (0.0, 0.0)]);
    let mut ledger = OracleLedger::new();
    assert_eq!(p.full_gradient(&[0.7], &mut ledger).unwrap(), vec![0.0]);
}

#[test]
fn objective_examples() {
    let (p, c) = toy();
    let mut ledger = OracleLedger::new();
    assert!((objective(&p, &c, &[1.0], &[1.0], &mut ledger).unwrap() + 1.0).abs() < 1e-14);

    let zero = CompositionProblem::new(Identity { q: 2, m: 1, n: 1 });
    let c = ConstraintSpec::consensus(2, Regularizer::ScaledSquaredNorm { mu: 2.0 });
    assert_eq!(objective(&zero, &c, &[0.0, 0.0], &[1.0, 1.0], &mut ledger).unwrap(), 2.0);
    assert!(objective(&zero, &c, &[0.0, 0.0], &[1.0], &mut ledger).is_err());
}

#[test]
fn ledger_exactness() {
    for (name, p, _) in generated() {
        let (m, n) = (p.inner_count() as u64, p.outer_count() as u64);
        let x = vec![0.3; p.dim_x()];
        let mut ledger = OracleLedger::new();
        p.mean_inner(&x, &mut ledger).unwrap();
        assert_eq!(ledger.inner_value_queries, m, "{name}");
        assert_eq!(ledger.query_total(), m, "{name}");
        let before = ledger;
        p.full_gradient(&x, &mut ledger).unwrap();
        assert_eq!(ledger.query_total() - before.query_total(), m + n, "{name}");
        assert_eq!(ledger.total(), ledger.inner_value_queries + ledger.inner_jacobian_queries + ledger.outer_value_queries + ledger.outer_gradient_queries);
    }
}

#[test]
fn uniform_weights_match_default_bitwise() {
    let oracle = Smooth::random(3, 2, 4, 5, 11);
    let a = CompositionProblem::new(oracle.clone());
    let b = CompositionProblem::with_weights(oracle, Weights::uniform(4), Weights::uniform(5)).unwrap();
    let x = [0.2, -0.4, 0.9];
    let mut l = OracleLedger::new();
    assert_eq!(a.full_gradient(&x, &mut l).unwrap(), b.full_gradient(&x, &mut l).unwrap());
    assert_eq!(a.value(&x, &mut l).unwrap().to_bits(), b.value(&x, &mut l).unwrap().to_bits());
}

#[test]
fn full_gradient_matches_jacobian_mean() {
    let p = smooth_weighted(4, 3, 5, 4, 2);
    let x = [0.1, -0.2, 0.3, 0.4];
    let mut l = OracleLedger::new();
    let jac = p.mean_jacobian(&x, &mut l).unwrap();
    let gx = p.mean_inner(&x, &mut l).unwrap();
    let v = p.mean_outer_gradient(&gx, &mut l).unwrap();
    assert_close(&p.full_gradient(&x, &mut l).unwrap(), &jac.tr_mul_vec(&v), 1e-14);
}

fn central_difference(p: &CompositionProblem, x: &[f64], h: f64) -> Vec<f64> {
    let mut l = OracleLedger::new();
    (0..x.len())
        .map(|k| {
            let mut plus = x.to_vec();
            plus[k] += h;
            let mut minus = x.to_vec();
            minus[k] -= h;
            (p.value(&plus, &mut l).unwrap() - p.value(&minus, &mut l).unwrap()) / (2.0 * h)
        })
        .collect()
}

fn check_fd(p: &CompositionProblem, x: &[f64]) {
    let mut l = OracleLedger::new();
    let g = p.full_gradient(x, &mut l).unwrap();
    let fd = central_difference(p, x, 1e-6);
    let scale = g.iter().map(|v| v.abs()).fold(1.0, f64::max);
    for (a, b) in g.iter().zip(&fd) {
        assert!((a - b).abs() <= 1e-5 * scale, "{a} vs {b}");
    }
}

#[test]
fn finite_difference_gradient_on_generators() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (_, p, _) in generated() {
        for _ in 0..10 {
            let x = random_point(p.dim_x(), 1.0, &mut rng);
            check_fd(&p, &x);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn finite_difference_gradient_nonlinear(seed in 0u64..1000, x in prop::collection::vec(-1.5f64..1.5, 4)) {
        let p = smooth_weighted(4, 3, 3, 2, seed);
        check_fd(&p, &x);
    }

    #[test]
    fn ledger_counters_never_decrease(xs in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 1..6)) {
        let p = smooth_weighted(3, 2, 4, 3, 5);
        let mut ledger = OracleLedger::new();
        let mut prev = ledger;
        for x in &xs {
            p.full_gradient(x, &mut ledger).unwrap();
            p.value(x, &mut ledger).unwrap();
            prop_assert!(ledger.inner_value_queries >= prev.inner_value_queries);
            prop_assert!(ledger.outer_value_queries >= prev.outer_value_queries);
            prop_assert!(ledger.total() >= prev.total());
            prop_assert!(ledger.query_total() > prev.query_total());
            prev = ledger;
        }
    }
}

#[test]
fn regularizer_prox_and_soft_threshold() {
    assert_eq!(compadmm_core::soft_threshold(&[3.0, -0.5, -2.0], 1.0), vec![2.0, 0.0, -1.0]);
    let r = Regularizer::ScaledSquaredNorm { mu: 1.0 };
    assert_eq!(r.prox(&[2.0], 1.0), vec![1.0]);
    assert!(Regularizer::L1 { tau: -1.0 }.validate().is_err());
    assert_eq!(Regularizer::L1 { tau: 2.0 }.value(&[1.0, -1.5]), 5.0);
}

#[test]
fn constraint_rows_must_match() {
    let err = ConstraintSpec::new(Matrix::identity(2), Matrix::identity(3), Regularizer::None);
    assert!(matches!(err, Err(Error::Shape { .. })));
    let c = ConstraintSpec::consensus(2, Regularizer::None);
    assert_eq!(c.feasibility(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    assert!(c.has_full_row_rank().unwrap());
    let rank_one = ConstraintSpec::new(
        Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0]]),
        Matrix::identity(2),
        Regularizer::None,
    )
    .unwrap();
    assert!(!rank_one.has_full_row_rank().unwrap());
}
