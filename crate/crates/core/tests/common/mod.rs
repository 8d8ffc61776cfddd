#![allow(dead_code)]

use qa_svd::{DataMatrix, GramOperator};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// The 3x2 demo matrix with the two-decimal entries as printed.
pub fn demo_a() -> DataMatrix {
    DataMatrix::from_rows(&[
        vec![-0.69, -0.68],
        vec![-0.023, 0.73],
        vec![0.72, -0.043],
    ])
    .unwrap()
}

pub fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> DataMatrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    DataMatrix::new(rows, cols, data).unwrap()
}

pub fn seeded(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_unit(rng: &mut StdRng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `|<a|b>|` for real vectors.
pub fn overlap(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b).abs()
}

/// Symmetric 2x2 Gram operator `lambda v vᵀ`.
pub fn rank_one_gram(lambda: f64, v: [f64; 2]) -> GramOperator {
    let data = vec![
        lambda * v[0] * v[0],
        lambda * v[0] * v[1],
        lambda * v[1] * v[0],
        lambda * v[1] * v[1],
    ];
    GramOperator::from_symmetric(2, data).unwrap()
}
