mod common;

use common::{demo_a, random_matrix, seeded};
use qa_svd::matrix::reconstruct;
use qa_svd::{deflate, full_diagonalize, gram, normalize_columns, oracle_top_k, DataMatrix, GramMode};
use rand::Rng;

#[test]
fn gram_spectra_are_nonnegative() {
    let mut rng = seeded(30);
    for _ in 0..100 {
        let (m, n) = (rng.gen_range(1..=20), rng.gen_range(1..=20));
        let a = random_matrix(&mut rng, m, n);
        let d = full_diagonalize(&gram(&a, GramMode::Explicit)).unwrap();
        let top = d.eigenvalues[0];
        assert!(d.eigenvalues.iter().all(|&l| l >= -1e-10 * top));
    }
}

#[test]
fn exact_triplets_satisfy_left_and_right_eigen_equations() {
    let a = random_matrix(&mut seeded(31), 7, 5);
    let o = oracle_top_k(&a, 5).unwrap();
    for c in &o.components {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm(&c.v) - 1.0).abs() <= 1e-10);
        assert!((norm(&c.u) - 1.0).abs() <= 1e-10);
        assert!((c.sigma * c.sigma - c.lambda).abs() <= 1e-12 * c.lambda);
        // A Aᵀ u = lambda u
        let aat_u = a.mul_vec(&a.mul_transpose_vec(&c.u).unwrap()).unwrap();
        for (x, y) in aat_u.iter().zip(&c.u) {
            assert!((x - c.lambda * y).abs() <= 1e-8 * c.lambda.max(1.0));
        }
    }
}

#[test]
fn full_reconstruction_of_demo() {
    let a = demo_a();
    let o = oracle_top_k(&a, 2).unwrap();
    let back = reconstruct(a.shape(), &o.components, 2).unwrap();
    assert!(a.sub(&back).unwrap().frobenius_norm() <= 1e-8);
    let zero = reconstruct(a.shape(), &o.components, 0).unwrap();
    assert_eq!(zero.frobenius_norm(), 0.0);
}

#[test]
fn demo_deflation_exposes_second_singular_value() {
    let a = demo_a();
    let o = oracle_top_k(&a, 1).unwrap();
    let rest = oracle_top_k(&deflate(&a, &o.components[0]).unwrap(), 1).unwrap();
    assert!((rest.components[0].sigma - 0.57f64.sqrt()).abs() < 0.005);
}

#[test]
fn deflating_twice_subtracts_the_term_again() {
    let a = random_matrix(&mut seeded(32), 4, 3);
    let c = &oracle_top_k(&a, 1).unwrap().components[0];
    let a1 = deflate(&a, c).unwrap();
    let a2 = deflate(&a1, c).unwrap();
    let moved = a2.sub(&a1).unwrap().frobenius_norm();
    assert!((moved - c.sigma).abs() <= 1e-8 * c.sigma);
}

#[test]
fn rank_one_round_trip() {
    let h = 1.0 / 2f64.sqrt();
    let a = DataMatrix::outer(2f64.sqrt(), &[h, -h], &[0.6, 0.8]).unwrap();
    let o = oracle_top_k(&a, 1).unwrap();
    assert!(a.sub(&reconstruct(a.shape(), &o.components, 1).unwrap()).unwrap().frobenius_norm() <= 1e-10);
    assert!(deflate(&a, &o.components[0]).unwrap().frobenius_norm() <= 1e-10);
}

#[test]
fn normalized_columns_have_zero_mean_unit_variance() {
    let mut rng = seeded(33);
    for _ in 0..20 {
        let (m, n) = (rng.gen_range(2..15), rng.gen_range(1..6));
        let a = random_matrix(&mut rng, m, n);
        let z = normalize_columns(&a).unwrap();
        assert!(z.is_normalized());
        for j in 0..z.cols() {
            let col = z.column(j);
            let m = col.len() as f64;
            let mean = col.iter().sum::<f64>() / m;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
            assert!(mean.abs() <= 1e-12);
            assert!((var.sqrt() - 1.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn implicit_and_explicit_gram_agree() {
    let mut rng = seeded(34);
    let a = random_matrix(&mut rng, 5, 3);
    let (e, i) = (gram(&a, GramMode::Explicit), gram(&a, GramMode::Implicit));
    for _ in 0..10 {
        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for (x, y) in e.apply(&v).unwrap().iter().zip(i.apply(&v).unwrap()) {
            assert!((x - y).abs() <= 1e-12);
        }
    }
    let dense = e.to_dense();
    for r in 0..3 {
        for c in 0..3 {
            assert!((dense[r * 3 + c] - dense[c * 3 + r]).abs() <= 1e-12 * e.row_sum_bound());
        }
    }
}
