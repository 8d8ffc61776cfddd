//! Data matrices, the Gram operator `G = AᵀA`, singular triplets, partial
//! reconstruction and deflation.

use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::vecops;

/// Column variance at or below this is treated as a constant column.
pub const MIN_COLUMN_VARIANCE: f64 = 1e-14;
/// Smallest eigenvalue for which a left singular vector is defined.
pub const MIN_LAMBDA: f64 = 1e-14;
/// Largest dimension for which `GramMode::Auto` materializes `G`.
pub const DENSE_GRAM_LIMIT: usize = 4096;

/// A real `m x n` information matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    normalized: bool,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!(
                "shape {rows}x{cols} has an empty dimension"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "entry ({}, {}) is not finite",
                pos / cols,
                pos % cols
            )));
        }
        Ok(Self {
            rows,
            cols,
            data,
            normalized: false,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                got: bad.len(),
            });
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        Ok(m)
    }

    /// `scale * u vᵀ`.
    pub fn outer(scale: f64, u: &[f64], v: &[f64]) -> Result<Self> {
        let data = u
            .iter()
            .flat_map(|&ui| v.iter().map(move |&vj| scale * ui * vj))
            .collect();
        Self::new(u.len(), v.len(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        vecops::norm(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `A v` (length m).
    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, v.len())?;
        Ok((0..self.rows).map(|i| vecops::dot(self.row(i), v)).collect())
    }

    /// `Aᵀ u` (length n).
    pub fn mul_transpose_vec(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows, u.len())?;
        let mut out = vec![0.0; self.cols];
        for (i, &ui) in u.iter().enumerate() {
            if ui != 0.0 {
                for (o, a) in out.iter_mut().zip(self.row(i)) {
                    *o += a * ui;
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &DataMatrix) -> Result<DataMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.data.len(),
                got: other.data.len(),
            });
        }
        DataMatrix::new(self.rows, self.cols, vecops::sub(&self.data, &other.data))
    }

    /// Parses the plain-text matrix format: a header line `m n`, then `m`
    /// lines of `n` whitespace-separated reals.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Parse(format!("bad dimension {t:?}")))
            })
            .collect::<Result<_>>()?;
        let [m, n] = dims[..] else {
            return Err(Error::Parse(format!("header must be \"m n\", got {header:?}")));
        };
        let mut data = Vec::with_capacity(m * n);
        for r in 0..m {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("expected {m} rows, found {r}")))?;
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(
                    tok.parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad number {tok:?} in row {r}")))?,
                );
            }
            if data.len() - before != n {
                return Err(Error::Parse(format!(
                    "row {r} has {} entries, expected {n}",
                    data.len() - before
                )));
            }
        }
        if lines.next().is_some() {
            return Err(Error::Parse(format!("more than {m} rows")));
        }
        Self::new(m, n, data)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            for (j, x) in self.row(i).iter().enumerate() {
                if j > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{x}");
            }
            s.push('\n');
        }
        s
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Centers every column to mean zero and scales it to unit population
/// variance (divisor `m`).
pub fn normalize_columns(a: &DataMatrix) -> Result<DataMatrix> {
    let (m, n) = a.shape();
    let mut out = a.clone();
    for j in 0..n {
        let col = a.column(j);
        let mean = col.iter().sum::<f64>() / m as f64;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64;
        if var <= MIN_COLUMN_VARIANCE {
            return Err(Error::ConstantColumn(j));
        }
        let sd = var.sqrt();
        for (i, x) in col.iter().enumerate() {
            out.data[i * n + j] = (x - mean) / sd;
        }
    }
    out.normalized = true;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GramMode {
    Explicit,
    Implicit,
    /// Explicit when `n <= DENSE_GRAM_LIMIT`.
    #[default]
    Auto,
}

#[derive(Debug, Clone)]
enum GramRepr {
    Explicit(Vec<f64>),
    Implicit(Arc<DataMatrix>),
}

/// The symmetric positive-semidefinite action `v -> AᵀA v / s`.
#[derive(Debug, Clone)]
pub struct GramOperator {
    dim: usize,
    repr: GramRepr,
    scale: f64,
}

/// Builds the Gram operator of `a`.
pub fn gram(a: &DataMatrix, mode: GramMode) -> GramOperator {
    let n = a.cols();
    let explicit = match mode {
        GramMode::Explicit => true,
        GramMode::Implicit => false,
        GramMode::Auto => n <= DENSE_GRAM_LIMIT,
    };
    let repr = if explicit {
        let mut g = vec![0.0; n * n];
        for r in 0..a.rows() {
            let row = a.row(r);
            for i in 0..n {
                let ai = row[i];
                if ai == 0.0 {
                    continue;
                }
                for j in i..n {
                    g[i * n + j] += ai * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[i * n + j] = g[j * n + i];
            }
        }
        GramRepr::Explicit(g)
    } else {
        GramRepr::Implicit(Arc::new(a.clone()))
    };
    GramOperator {
        dim: n,
        repr,
        scale: 1.0,
    }
}

impl GramOperator {
    /// Wraps an arbitrary dense symmetric matrix. Used for oracle checks on
    /// matrices that do not come from a data matrix.
    pub fn from_symmetric(n: usize, data: Vec<f64>) -> Result<Self> {
        check_len(n * n, data.len())?;
        let max = data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut asym = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                asym = asym.max((data[i * n + j] - data[j * n + i]).abs());
            }
        }
        if asym > 1e-10 * max {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self {
            dim: n,
            repr: GramRepr::Explicit(data),
            scale: 1.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_explicit(&self) -> bool {
        matches!(self.repr, GramRepr::Explicit(_))
    }

    /// Same operator divided by `scale` (must be positive).
    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("gram scale {scale}")));
        }
        Ok(Self {
            scale,
            ..self.clone()
        })
    }

    /// `G v / s`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.apply_unscaled(v)?;
        if self.scale != 1.0 {
            out.iter_mut().for_each(|x| *x /= self.scale);
        }
        Ok(out)
    }

    /// `G v`, ignoring the scale factor.
    pub fn apply_unscaled(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim, v.len())?;
        match &self.repr {
            GramRepr::Explicit(g) => Ok(g
                .chunks_exact(self.dim)
                .map(|row| vecops::dot(row, v))
                .collect()),
            GramRepr::Implicit(a) => a.mul_transpose_vec(&a.mul_vec(v)?),
        }
    }

    /// Writes `G psi / s` into `out` for complex `psi`.
    pub(crate) fn apply_complex_into(&self, psi: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(psi.len(), self.dim);
        let inv = 1.0 / self.scale;
        match &self.repr {
            GramRepr::Explicit(g) => {
                for (o, row) in out.iter_mut().zip(g.chunks_exact(self.dim)) {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (gij, z) in row.iter().zip(psi) {
                        re += gij * z.re;
                        im += gij * z.im;
                    }
                    *o = Complex64::new(re * inv, im * inv);
                }
            }
            GramRepr::Implicit(a) => {
                let tmp: Vec<Complex64> = (0..a.rows())
                    .map(|i| {
                        a.row(i)
                            .iter()
                            .zip(psi)
                            .map(|(x, z)| z * x)
                            .sum::<Complex64>()
                    })
                    .collect();
                out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
                for (i, t) in tmp.iter().enumerate() {
                    for (o, x) in out.iter_mut().zip(a.row(i)) {
                        *o += t * x;
                    }
                }
                out.iter_mut().for_each(|o| *o *= inv);
            }
        }
    }

    /// Dense unscaled `G`, row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        match &self.repr {
            GramRepr::Explicit(g) => g.clone(),
            GramRepr::Implicit(_) => {
                let n = self.dim;
                let mut g = vec![0.0; n * n];
                let mut e = vec![0.0; n];
                for j in 0..n {
                    e[j] = 1.0;
                    let col = self.apply_unscaled(&e).expect("dimension matches");
                    for i in 0..n {
                        g[i * n + j] = col[i];
                    }
                    e[j] = 0.0;
                }
                g
            }
        }
    }

    /// Upper bound on the largest eigenvalue of the unscaled `G`: the max
    /// absolute row sum (for the implicit form, of `|A|ᵀ|A|`).
    pub fn row_sum_bound(&self) -> f64 {
        match &self.repr {
            GramRepr::Explicit(g) => g
                .chunks_exact(self.dim)
                .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
                .fold(0.0, f64::max),
            GramRepr::Implicit(a) => {
                let row_abs: Vec<f64> = (0..a.rows())
                    .map(|i| a.row(i).iter().map(|x| x.abs()).sum())
                    .collect();
                let mut out = vec![0.0; a.cols()];
                for (i, s) in row_abs.iter().enumerate() {
                    for (o, x) in out.iter_mut().zip(a.row(i)) {
                        *o += x.abs() * s;
                    }
                }
                out.into_iter().fold(0.0, f64::max)
            }
        }
    }
}

/// Applies `G / s` to `v` (the free-function form of [`GramOperator::apply`]).
pub fn gram_apply(g: &GramOperator, v: &[f64]) -> Result<Vec<f64>> {
    g.apply(v)
}

/// One singular triplet `(lambda, v, u)` with `sigma = sqrt(lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalComponent {
    pub lambda: f64,
    pub sigma: f64,
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    /// `||G v - lambda v||` on the operator the component was read from.
    pub residual: f64,
}

impl PrincipalComponent {
    /// Builds the triplet for an eigenpair `(lambda, v)` of `AᵀA`, computing
    /// `u` and the residual against `g`.
    pub fn from_eigenpair(
        a: &DataMatrix,
        g: &GramOperator,
        lambda: f64,
        v: Vec<f64>,
    ) -> Result<Self> {
        let u = left_vector(a, &v, lambda)?;
        let residual = eigen_residual(g, lambda, &v)?;
        Ok(Self {
            lambda,
            sigma: lambda.sqrt(),
            v,
            u,
            residual,
        })
    }
}

/// `||G v - lambda v||₂` on the unscaled operator.
pub fn eigen_residual(g: &GramOperator, lambda: f64, v: &[f64]) -> Result<f64> {
    let gv = g.apply_unscaled(v)?;
    Ok(gv
        .iter()
        .zip(v)
        .map(|(a, b)| (a - lambda * b).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// `u = A v / sqrt(lambda)`.
pub fn left_vector(a: &DataMatrix, v: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if lambda.is_nan() || lambda <= MIN_LAMBDA {
        return Err(Error::ZeroSingularValue(lambda));
    }
    let s = lambda.sqrt();
    let mut u = a.mul_vec(v)?;
    u.iter_mut().for_each(|x| *x /= s);
    Ok(u)
}

/// `sum_{j<k} sqrt(lambda_j) u_j v_jᵀ` as an `m x n` matrix.
pub fn reconstruct(
    shape: (usize, usize),
    components: &[PrincipalComponent],
    k: usize,
) -> Result<DataMatrix> {
    let (m, n) = shape;
    if k > components.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} exceeds {} available components",
            components.len()
        )));
    }
    let mut data = vec![0.0; m * n];
    for c in &components[..k] {
        check_len(m, c.u.len())?;
        check_len(n, c.v.len())?;
        for (i, &ui) in c.u.iter().enumerate() {
            let w = c.sigma * ui;
            for (d, vj) in data[i * n..(i + 1) * n].iter_mut().zip(&c.v) {
                *d += w * vj;
            }
        }
    }
    DataMatrix::new(m, n, data)
}

/// `A - sqrt(lambda) u vᵀ`.
pub fn deflate(a: &DataMatrix, c: &PrincipalComponent) -> Result<DataMatrix> {
    check_len(a.rows(), c.u.len())?;
    check_len(a.cols(), c.v.len())?;
    a.sub(&DataMatrix::outer(c.sigma, &c.u, &c.v)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn demo_a() -> DataMatrix {
        DataMatrix::from_rows(&[
            vec![-0.69, -0.68],
            vec![-0.023, 0.73],
            vec![0.72, -0.043],
        ])
        .unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn normalize_examples() {
        let a = DataMatrix::from_rows(&[vec![1.0, -1.0], vec![2.0, 1.0], vec![3.0, 0.0]]).unwrap();
        let b = normalize_columns(&a).unwrap();
        assert!(b.is_normalized());
        let c0 = b.column(0);
        assert!(close(c0[0], -1.224745, 1e-6));
        assert!(close(c0[1], 0.0, 1e-12));
        assert!(close(c0[2], 1.224745, 1e-6));
        assert!(!a.is_normalized());

        let fixed = DataMatrix::from_rows(&[vec![-1.0], vec![1.0]]).unwrap();
        let out = normalize_columns(&fixed).unwrap();
        assert_eq!(out.column(0), vec![-1.0, 1.0]);

        let constant = DataMatrix::from_rows(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![0.0, 5.0]]).unwrap();
        assert_eq!(normalize_columns(&constant), Err(Error::ConstantColumn(1)));
    }

    #[test]
    fn normalized_columns_meet_tolerances() {
        let a = DataMatrix::from_rows(&[
            vec![3.0, 0.1, -7.0],
            vec![1.5, 0.4, 2.0],
            vec![-2.0, 0.3, 9.0],
            vec![0.25, 0.2, 1.0],
        ])
        .unwrap();
        let b = normalize_columns(&a).unwrap();
        for j in 0..3 {
            let c = b.column(j);
            let mean = c.iter().sum::<f64>() / 4.0;
            let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
            assert!(mean.abs() <= 1e-12);
            assert!((var - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn gram_of_demo_matrix() {
        let g = gram(&demo_a(), GramMode::Explicit).to_dense();
        // exact for the two-decimal entries; rounds to [[1, 0.42], [0.42, 1]]
        let expect = [0.995029, 0.42145, 0.42145, 0.997149];
        for (x, e) in g.iter().zip(expect) {
            assert!(close(*x, e, 1e-12), "{x} vs {e}");
        }
        let id = gram(&DataMatrix::identity(2).unwrap(), GramMode::Explicit).to_dense();
        assert_eq!(id, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn gram_apply_examples() {
        let g = gram(&demo_a(), GramMode::Auto);
        let v = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        let gv = gram_apply(&g, &v).unwrap();
        for (x, y) in gv.iter().zip(v) {
            assert!(close(*x, 1.4175 * y, 0.002 * y));
        }
        assert_eq!(gram_apply(&g, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let half = g.with_scale(2.0).unwrap();
        let hv = gram_apply(&half, &v).unwrap();
        for (x, y) in hv.iter().zip(&gv) {
            assert!(close(*x, y / 2.0, 1e-15));
            assert!(close(*x, 0.70875 * v[0], 0.001));
        }
        assert!(matches!(
            gram_apply(&g, &[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn left_vector_examples() {
        let v = [1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        let u = left_vector(&demo_a(), &v, 1.43).unwrap();
        let expect = [-0.810, 0.418, 0.400];
        for (x, e) in u.iter().zip(expect) {
            assert!(close(*x, e, 1e-3), "{x} vs {e}");
        }
        let e1 = left_vector(&DataMatrix::identity(3).unwrap(), &[1.0, 0.0, 0.0], 1.0).unwrap();
        assert_eq!(e1, vec![1.0, 0.0, 0.0]);
        assert_eq!(
            left_vector(&demo_a(), &v, 0.0),
            Err(Error::ZeroSingularValue(0.0))
        );
    }

    #[test]
    fn reconstruct_rank_one_and_empty() {
        let u = [0.6, 0.8];
        let v = [0.0, 1.0, 0.0];
        let a = DataMatrix::outer(2f64.sqrt(), &u, &v).unwrap();
        let c = PrincipalComponent {
            lambda: 2.0,
            sigma: 2f64.sqrt(),
            v: v.to_vec(),
            u: u.to_vec(),
            residual: 0.0,
        };
        let r = reconstruct(a.shape(), std::slice::from_ref(&c), 1).unwrap();
        assert!(r.sub(&a).unwrap().frobenius_norm() <= 1e-10);
        let z = reconstruct((2, 3), &[], 0).unwrap();
        assert_eq!(z.frobenius_norm(), 0.0);
        assert!(deflate(&a, &c).unwrap().frobenius_norm() <= 1e-10);
        assert!(reconstruct((2, 3), &[], 1).is_err());
        assert!(reconstruct((3, 3), &[c], 1).is_err());
    }

    #[test]
    fn text_format_round_trip() {
        let a = demo_a();
        let text = a.to_text();
        assert!(text.starts_with("3 2\n-0.69 -0.68\n"));
        assert_eq!(DataMatrix::parse_text(&text).unwrap(), a);
        assert!(DataMatrix::parse_text("2 2\n1 2\n3\n").is_err());
        assert!(DataMatrix::parse_text("2 2\n1 2\n").is_err());
        assert!(DataMatrix::parse_text("1 1\nx\n").is_err());
        assert!(DataMatrix::parse_text("0 1\n").is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(DataMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DataMatrix::new(1, 2, vec![1.0]).is_err());
    }

    #[test]
    fn row_sum_bound_matches_between_forms_for_nonnegative_data() {
        let a = DataMatrix::from_rows(&[vec![1.0, 2.0], vec![0.5, 3.0]]).unwrap();
        let e = gram(&a, GramMode::Explicit).row_sum_bound();
        let i = gram(&a, GramMode::Implicit).row_sum_bound();
        assert!(close(e, i, 1e-12));
        let ge = gram(&demo_a(), GramMode::Explicit);
        let gi = gram(&demo_a(), GramMode::Implicit);
        assert!(gi.row_sum_bound() >= ge.row_sum_bound() - 1e-12);
        assert!(ge.row_sum_bound() >= 1.4175);
    }
}
