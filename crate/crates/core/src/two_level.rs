//! Two-level reduction of the anneal onto span{v0, phi0}.
//!
//! With `K = lambda0(G) / Lambda0` and `alpha = <phi0|v0>`, the state is
//! approximated as `a(x) v0 + b(x) phi0`, and the coefficients satisfy
//! `M(x) (a, b)ᵀ = E(x) (a, b)ᵀ` with
//!
//! ```text
//! M(x) = Lambda0 * [ -K x + (1 - x)   -K x alpha ]
//!                  [ -2 (1 - x) alpha  -(1 - x)  ]
//! ```
//!
//! The basis is not orthogonal, so `M` is not symmetric.

use crate::error::{Error, Result};

/// Radicands in `[-RADICAND_SLACK, 0)` are clamped to zero.
const RADICAND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelParams {
    pub k: f64,
    pub alpha: f64,
    pub lambda0: f64,
}

impl TwoLevelParams {
    pub fn new(k: f64, alpha: f64, lambda0: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("K must be positive, got {k}")));
        }
        if alpha.is_nan() || alpha.abs() > 1.0 {
            return Err(Error::InvalidParameter(format!("|alpha| must be <= 1, got {alpha}")));
        }
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Lambda0 must be positive, got {lambda0}"
            )));
        }
        Ok(Self { k, alpha, lambda0 })
    }

    /// The reduced system matrix `M(x)`, row-major.
    pub fn system_matrix(&self, x: f64) -> [[f64; 2]; 2] {
        let l = self.lambda0;
        let lam = self.k * l;
        [
            [-lam * x + (1.0 - x) * l, -lam * x * self.alpha],
            [-2.0 * l * (1.0 - x) * self.alpha, -(1.0 - x) * l],
        ]
    }

    fn radicand(&self, x: f64) -> f64 {
        let k = self.k;
        x * x * k * k
            + 4.0 * (1.0 - x).powi(2)
            + 4.0 * x * (1.0 - x) * (2.0 * self.alpha * self.alpha - 1.0) * k
    }
}

/// `(E_minus, E_plus)` at `x`.
pub fn energy_branches(p: &TwoLevelParams, x: f64) -> Result<(f64, f64)> {
    let mut r = p.radicand(x);
    if r < -RADICAND_SLACK {
        return Err(Error::NegativeDiscriminant(r));
    }
    r = r.max(0.0);
    let root = r.sqrt();
    let base = -x * p.k;
    Ok((
        0.5 * p.lambda0 * (base - root),
        0.5 * p.lambda0 * (base + root),
    ))
}

/// Unit-normalized ground-branch eigenvector of `M(x)` with no sign convention.
fn ground_vector(p: &TwoLevelParams, x: f64) -> Result<(f64, f64)> {
    let (e, _) = energy_branches(p, x)?;
    let m = p.system_matrix(x);
    // (M - E) (a, b) = 0: each row gives a candidate null vector
    let r1 = (-m[0][1], m[0][0] - e);
    let r2 = (m[1][1] - e, -m[1][0]);
    let n1 = r1.0.hypot(r1.1);
    let n2 = r2.0.hypot(r2.1);
    let scale = p.lambda0 * (1.0 + p.k);
    let (a, b) = if n1 >= n2 { r1 } else { r2 };
    if n1.max(n2) <= 1e-14 * scale {
        return Err(Error::IllConditioned(x));
    }
    // a^2 + b^2 + 2 a b alpha is the squared norm of a v0 + b phi0
    let physical = a * a + b * b + 2.0 * a * b * p.alpha;
    if physical <= 0.0 {
        return Err(Error::IllConditioned(x));
    }
    let s = physical.sqrt();
    Ok((a / s, b / s))
}

/// Ground-branch coefficients `(a, b)` at `x`, continued from `(0, 1)` at
/// `x = 0` along a uniform grid.
pub fn coefficients(p: &TwoLevelParams, x: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!("x = {x} outside [0, 1]")));
    }
    let steps = ((x * 1000.0).ceil() as usize).max(1);
    let xs: Vec<f64> = (0..=steps).map(|i| x * i as f64 / steps as f64).collect();
    Ok(*coefficient_path(p, &xs)?.last().expect("non-empty grid"))
}

/// Ground-branch coefficients along an increasing grid starting at 0; the
/// sign at each point maximizes overlap with the previous point.
pub fn coefficient_path(p: &TwoLevelParams, xs: &[f64]) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(xs.len());
    let mut prev = (0.0, 1.0);
    for &x in xs {
        let (a, b) = ground_vector(p, x)?;
        let overlap = a * prev.0 + b * prev.1 + p.alpha * (a * prev.1 + b * prev.0);
        let cur = if overlap < 0.0 { (-a, -b) } else { (a, b) };
        out.push(cur);
        prev = cur;
    }
    Ok(out)
}

fn check_overlap(alpha: f64) -> Result<()> {
    if (alpha * (1.0 - alpha * alpha)).abs() < 1e-14 {
        Err(Error::DegenerateOverlap(alpha))
    } else {
        Ok(())
    }
}

/// Closed-form minimum over `x` in `[0, 1]` of `E_plus - E_minus`.
///
/// The radicand is a quadratic in `x` whose vertex passes `x = 1` once
/// `K < 2 (2 alpha^2 - 1)`; the minimum is then the endpoint gap `K Lambda0`.
pub fn min_gap(p: &TwoLevelParams) -> Result<f64> {
    check_overlap(p.alpha)?;
    let (k, a2) = (p.k, p.alpha * p.alpha);
    if k < 2.0 * (2.0 * a2 - 1.0) {
        return Ok(k * p.lambda0);
    }
    let num = k * k * a2 * (1.0 - a2);
    let den = (2.0 + k).powi(2) - 8.0 * k * a2;
    Ok(4.0 * p.lambda0 * (num / den).sqrt())
}

/// Location of the minimum gap: the vertex of the radicand, a quadratic in `x`.
pub fn min_gap_location(p: &TwoLevelParams) -> f64 {
    let c = 2.0 * p.alpha * p.alpha - 1.0;
    let quad = p.k * p.k + 4.0 - 4.0 * c * p.k;
    let lin = -8.0 + 4.0 * c * p.k;
    (-lin / (2.0 * quad)).clamp(0.0, 1.0)
}

/// Adiabatic time estimate `Lambda0 * hbar / min_gap^2` (`hbar = 1`).
pub fn time_scale(p: &TwoLevelParams) -> Result<f64> {
    let g = min_gap(p)?;
    Ok(p.lambda0 / (g * g))
}

/// The `alpha`-divergence of the time scale alone: `1 / (Lambda0 alpha^2 (1 - alpha^2))`.
///
/// While the gap minimum is interior, `time_scale` equals this times
/// `((2 + K)^2 - 8 K alpha^2) / (16 K^2)`, which stays within
/// `[(2 - K)^2, (2 + K)^2] / (16 K^2)`.
pub fn time_scale_divergence(p: &TwoLevelParams) -> Result<f64> {
    check_overlap(p.alpha)?;
    let a2 = p.alpha * p.alpha;
    Ok(1.0 / (p.lambda0 * a2 * (1.0 - a2)))
}

/// Eigenvalues of a real 2x2 matrix from its trace and determinant, sorted.
fn eig2(m: [[f64; 2]; 2]) -> (f64, f64) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let half = 0.5 * tr;
    let disc = (half * half - det).max(0.0).sqrt();
    (half - disc, half + disc)
}

/// Grid minimum of the gap by explicit diagonalization of `M(x)` on
/// `grid_size` evenly spaced points in `[0, 1]`, refined by a bracketed
/// search around the best grid point. Returns `(gap, x)`.
pub fn reduced_gap_oracle(p: &TwoLevelParams, grid_size: usize) -> Result<(f64, f64)> {
    if grid_size < 3 {
        return Err(Error::InvalidParameter(format!(
            "grid size must be >= 3, got {grid_size}"
        )));
    }
    let gap_at = |x: f64| {
        let (lo, hi) = eig2(p.system_matrix(x));
        hi - lo
    };
    let mut best = (f64::INFINITY, 0.0);
    let last = (grid_size - 1) as f64;
    for i in 0..grid_size {
        let x = i as f64 / last;
        let gap = gap_at(x);
        if gap < best.0 {
            best = (gap, x);
        }
    }
    // golden-section polish inside the neighbouring grid cells
    let h = 1.0 / last;
    let (mut lo, mut hi) = ((best.1 - h).max(0.0), (best.1 + h).min(1.0));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let (x1, x2) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if gap_at(x1) < gap_at(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let x = 0.5 * (lo + hi);
    let gap = gap_at(x);
    Ok(if gap < best.0 { (gap, x) } else { best })
}

/// One row of the `gap` CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSample {
    pub x: f64,
    pub e_minus: f64,
    pub e_plus: f64,
    pub a: f64,
    pub b: f64,
}

impl GapSample {
    pub fn gap(&self) -> f64 {
        self.e_plus - self.e_minus
    }
}

/// Branches and coefficients on `points` evenly spaced values of `x`.
pub fn sample_grid(p: &TwoLevelParams, points: usize) -> Result<Vec<GapSample>> {
    if points < 2 {
        return Err(Error::InvalidParameter("grid needs at least two points".into()));
    }
    let xs: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
    let coeffs = coefficient_path(p, &xs)?;
    xs.iter()
        .zip(coeffs)
        .map(|(&x, (a, b))| {
            let (e_minus, e_plus) = energy_branches(p, x)?;
            Ok(GapSample {
                x,
                e_minus,
                e_plus,
                a,
                b,
            })
        })
        .collect()
}
