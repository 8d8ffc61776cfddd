//! Classical ground truth: cyclic Jacobi diagonalization and power iteration.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::matrix::{eigen_residual, GramOperator};
use crate::vecops;

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[j]` belongs to `eigenvalues[j]`.
    pub eigenvectors: Vec<Vec<f64>>,
    pub sweeps: usize,
    pub off_diagonal_norm: f64,
}

/// A single eigenpair of `G` (unscaled).
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub v: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

const MAX_SWEEPS: usize = 100;

/// Full eigendecomposition of the unscaled `G` by cyclic Jacobi rotations.
pub fn full_diagonalize(g: &GramOperator) -> Result<EigenDecomposition> {
    let n = g.dim();
    let a = g.to_dense();
    let max = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut asym = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((a[i * n + j] - a[j * n + i]).abs());
        }
    }
    if asym > 1e-10 * max {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(jacobi(n, a))
}

fn off_norm(n: usize, a: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[i * n + j] * a[i * n + j];
            }
        }
    }
    s.sqrt()
}

fn jacobi(n: usize, mut a: Vec<f64>) -> EigenDecomposition {
    // symmetrize so rounding in the input cannot bias the rotations
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        if off_norm(n, &a) <= 1e-15 * scale || scale == 0.0 {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // A <- Jᵀ A J on rows/cols p, q
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let eigenvalues = order.iter().map(|&i| a[i * n + i]).collect();
    let eigenvectors = order
        .iter()
        .map(|&j| {
            let mut col: Vec<f64> = (0..n).map(|k| v[k * n + j]).collect();
            vecops::gauge_fix_real(&mut col);
            col
        })
        .collect();
    EigenDecomposition {
        eigenvalues,
        eigenvectors,
        sweeps,
        off_diagonal_norm: off_norm(n, &a),
    }
}

/// Dominant eigenpair of the unscaled `G` from a fixed-seed random start.
///
/// Stops once `||G v - lambda v|| <= tol * max(lambda, 1)`.
pub fn power_iteration(g: &GramOperator, tol: f64, max_iter: usize, seed: u64) -> Result<EigenPair> {
    let n = g.dim();
    let mut rng = StdRng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    if vecops::normalize(&mut v) == 0.0 {
        v[0] = 1.0;
    }
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let mut w = g.apply_unscaled(&v)?;
        let lambda = vecops::dot(&v, &w);
        residual = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - lambda * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= tol * lambda.abs().max(1.0) {
            vecops::gauge_fix_real(&mut v);
            return Ok(EigenPair {
                lambda,
                residual: eigen_residual(g, lambda, &v)?,
                v,
                iterations: it,
            });
        }
        if vecops::normalize(&mut w) == 0.0 {
            // v lies in the null space; G = 0 on it and every vector is an
            // eigenvector with eigenvalue 0
            return Ok(EigenPair {
                lambda: 0.0,
                v,
                residual: 0.0,
                iterations: it,
            });
        }
        v = w;
    }
    Err(Error::MaxIterExceeded {
        iterations: max_iter,
        residual,
    })
}
