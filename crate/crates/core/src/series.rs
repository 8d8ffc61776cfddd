//! Power-series propagator `psi(t) = sum_n (t/T)^n f_n`.
//!
//! The coefficient vectors obey a time-independent recurrence:
//! `f_0 = phi0`, `f_1 = (T/i) H0 f_0`, and for `n >= 2`
//! `f_n = T/(i n) [H0 f_{n-1} - (G + H0) f_{n-2}]`.

use num_complex::Complex64;

use crate::anneal::{
    hamiltonian_apply, hamiltonian_bound, initial_state, InitialHamiltonian, StateVector,
};
use crate::error::{Error, Result};
use crate::matrix::GramOperator;
use crate::vecops;

/// Largest `T * Hbound` accepted before intermediate terms get too large to
/// sum accurately in double precision.
pub const MAX_SERIES_RANGE: f64 = 30.0;
pub const DEFAULT_TAIL_TOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct SeriesExpansion {
    pub terms: Vec<Vec<Complex64>>,
    pub total_time: f64,
    /// Norm of the last retained term.
    pub tail_norm: f64,
}

impl SeriesExpansion {
    /// Highest retained power `N`.
    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    /// The expansion cut after power `order`.
    pub fn truncated(&self, order: usize) -> Self {
        let terms: Vec<_> = self.terms[..=order.min(self.order())].to_vec();
        let tail_norm = vecops::cnorm(terms.last().expect("f_0 always present"));
        Self {
            terms,
            total_time: self.total_time,
            tail_norm,
        }
    }

    /// `sum_n s^n f_n` for `s = t / T`, unnormalized.
    pub fn evaluate(&self, s: f64) -> Vec<Complex64> {
        let n = self.terms[0].len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for f in self.terms.iter().rev() {
            for (o, z) in out.iter_mut().zip(f) {
                *o = *o * s + z;
            }
        }
        out
    }
}

/// Builds `f_0 ... f_N`, stopping at the first `n` with
/// `||f_n|| <= tail_tol * max_{k<n} ||f_k||`.
pub fn series_terms(
    g: &GramOperator,
    h0: &InitialHamiltonian,
    total_time: f64,
    max_order: usize,
    tail_tol: f64,
) -> Result<SeriesExpansion> {
    if !(total_time > 0.0 && total_time.is_finite()) {
        return Err(Error::InvalidParameter(format!("T must be positive, got {total_time}")));
    }
    if max_order < 2 {
        return Err(Error::InvalidParameter(format!("max order must be >= 2, got {max_order}")));
    }
    let range = total_time * hamiltonian_bound(g, h0);
    if range > MAX_SERIES_RANGE {
        return Err(Error::SeriesOutOfRange(range));
    }
    let n = g.dim();
    let f0 = initial_state(h0, n)?.amplitudes;

    let h0_apply = |f: &[Complex64]| -> Vec<Complex64> {
        // H(x = 0) = H0
        hamiltonian_apply(g, h0, 0.0, &StateVector { amplitudes: f.to_vec() })
            .expect("dimensions checked")
    };
    let g_apply = |f: &[Complex64]| -> Vec<Complex64> {
        // H(x = 1) = -G
        hamiltonian_apply(g, h0, 1.0, &StateVector { amplitudes: f.to_vec() })
            .expect("dimensions checked")
            .into_iter()
            .map(|z| -z)
            .collect()
    };
    // T / i = -i T
    let over_i = |z: Complex64, c: f64| Complex64::new(z.im * c, -z.re * c);

    let f1: Vec<Complex64> = h0_apply(&f0).into_iter().map(|z| over_i(z, total_time)).collect();
    let mut max_norm = vecops::cnorm(&f0).max(vecops::cnorm(&f1));
    let mut terms = vec![f0, f1];
    let mut tail = vecops::cnorm(&terms[1]);
    if tail <= tail_tol * vecops::cnorm(&terms[0]) {
        return Ok(SeriesExpansion {
            terms,
            total_time,
            tail_norm: tail,
        });
    }
    for order in 2..=max_order {
        let prev = &terms[order - 1];
        let prev2 = &terms[order - 2];
        let h_prev = h0_apply(prev);
        let g_prev2 = g_apply(prev2);
        let h_prev2 = h0_apply(prev2);
        let c = total_time / order as f64;
        let f: Vec<Complex64> = h_prev
            .iter()
            .zip(&g_prev2)
            .zip(&h_prev2)
            .map(|((a, b), d)| over_i(a - b - d, c))
            .collect();
        tail = vecops::cnorm(&f);
        terms.push(f);
        if tail <= tail_tol * max_norm {
            return Ok(SeriesExpansion {
                terms,
                total_time,
                tail_norm: tail,
            });
        }
        max_norm = max_norm.max(tail);
    }
    Err(Error::TruncationNotReached {
        order: max_order,
        tail_norm: tail,
    })
}

/// `psi(T) = sum_n f_n`, normalized; also returns the norm before
/// normalization.
pub fn series_sum(expansion: &SeriesExpansion) -> (StateVector, f64) {
    let raw = StateVector {
        amplitudes: expansion.evaluate(1.0),
    };
    let norm = raw.norm();
    (raw.normalized(), norm)
}
