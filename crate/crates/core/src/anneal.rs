//! Time evolution under the interpolated Hamiltonian
//! `H(x) = -x G + (1 - x) H0`, `x = t / T`, in units where `hbar = epsilon = 1`.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::GramOperator;
use crate::vecops;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Where the initial Hamiltonian puts its single bound level.
#[derive(Debug, Clone, PartialEq)]
pub enum GroundState {
    /// The computational basis vector `e_i`.
    Basis(usize),
    /// An arbitrary real unit vector (used for rotated restarts).
    Vector(Vec<f64>),
}

/// `H0 = -(lambda0 + lambda_exc) |phi0><phi0| + lambda_exc`: ground level
/// `-lambda0` on `phi0`, every orthogonal direction at `+lambda_exc`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialHamiltonian {
    lambda0: f64,
    lambda_exc: f64,
    ground: GroundState,
}

impl Default for InitialHamiltonian {
    fn default() -> Self {
        Self {
            lambda0: 1.0,
            lambda_exc: 1.0,
            ground: GroundState::Basis(0),
        }
    }
}

impl InitialHamiltonian {
    pub fn new(lambda0: f64, lambda_exc: f64, ground_index: usize) -> Result<Self> {
        check_levels(lambda0, lambda_exc)?;
        Ok(Self {
            lambda0,
            lambda_exc,
            ground: GroundState::Basis(ground_index),
        })
    }

    /// Initial Hamiltonian whose ground state is the (normalized) vector `phi0`.
    pub fn with_ground_vector(lambda0: f64, lambda_exc: f64, mut phi0: Vec<f64>) -> Result<Self> {
        check_levels(lambda0, lambda_exc)?;
        if vecops::normalize(&mut phi0) == 0.0 {
            return Err(Error::InvalidParameter("zero ground vector".into()));
        }
        Ok(Self {
            lambda0,
            lambda_exc,
            ground: GroundState::Vector(phi0),
        })
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn lambda_exc(&self) -> f64 {
        self.lambda_exc
    }

    pub fn ground(&self) -> &GroundState {
        &self.ground
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        match &self.ground {
            GroundState::Basis(i) if *i >= n => Err(Error::IndexOutOfRange { index: *i, dim: n }),
            GroundState::Vector(v) if v.len() != n => Err(Error::DimensionMismatch {
                expected: n,
                got: v.len(),
            }),
            _ => Ok(()),
        }
    }

    /// `H0 psi` written into `out`.
    fn apply_into(&self, psi: &[Complex64], out: &mut [Complex64]) {
        let shift = self.lambda0 + self.lambda_exc;
        for (o, z) in out.iter_mut().zip(psi) {
            *o = z * self.lambda_exc;
        }
        match &self.ground {
            GroundState::Basis(i) => out[*i] -= psi[*i] * shift,
            GroundState::Vector(phi) => {
                let proj: Complex64 = phi.iter().zip(psi).map(|(p, z)| z * p).sum();
                for (o, p) in out.iter_mut().zip(phi) {
                    *o -= proj * (shift * p);
                }
            }
        }
    }
}

fn check_levels(lambda0: f64, lambda_exc: f64) -> Result<()> {
    if lambda0 > 0.0 && lambda_exc > 0.0 && lambda0.is_finite() && lambda_exc.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "initial levels must be positive (lambda0 = {lambda0}, lambda = {lambda_exc})"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integrator {
    /// `psi <- psi + H psi dt / i`, unnormalized first order.
    Euler,
    /// Euler followed by renormalization every step.
    EulerRenorm,
    /// Implicit midpoint (Cayley form); exactly norm preserving.
    #[default]
    Midpoint,
}

impl FromStr for Integrator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Self::Euler),
            "euler-renorm" => Ok(Self::EulerRenorm),
            "midpoint" => Ok(Self::Midpoint),
            other => Err(Error::InvalidParameter(format!("unknown integrator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepPolicy {
    /// `N = ceil(10 T Hbound)`, i.e. `dt * Hbound <= 0.1`.
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealSchedule {
    pub total_time: f64,
    pub steps: StepPolicy,
    pub integrator: Integrator,
    /// Record a trace point every this many steps; 0 disables the trace.
    pub trace_stride: usize,
}

impl AnnealSchedule {
    pub fn new(total_time: f64) -> Self {
        Self {
            total_time,
            steps: StepPolicy::Auto,
            integrator: Integrator::Midpoint,
            trace_stride: 0,
        }
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = StepPolicy::Fixed(steps);
        self
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn with_trace_stride(mut self, stride: usize) -> Self {
        self.trace_stride = stride;
        self
    }

    pub fn step_count(&self, h_bound: f64) -> usize {
        match self.steps {
            StepPolicy::Fixed(n) => n,
            StepPolicy::Auto => ((10.0 * self.total_time * h_bound).ceil() as usize).max(1),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.total_time > 0.0 && self.total_time.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "total time must be positive, got {}",
                self.total_time
            )));
        }
        if self.steps == StepPolicy::Fixed(0) {
            return Err(Error::InvalidParameter("step count must be positive".into()));
        }
        Ok(())
    }
}

/// A complex state vector `|psi>`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn from_real(v: &[f64]) -> Self {
        Self {
            amplitudes: v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        vecops::cnorm(&self.amplitudes)
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self {
            amplitudes: self.amplitudes.iter().map(|z| z / n).collect(),
        }
    }

    /// Rotates the global phase so the largest-magnitude amplitude is real
    /// and positive.
    pub fn gauge_fixed(&self) -> Self {
        let Some(pivot) = vecops::argmax_abs(self.amplitudes.iter().map(|z| z.norm())) else {
            return self.clone();
        };
        let p = self.amplitudes[pivot];
        if p.norm() == 0.0 {
            return self.clone();
        }
        let phase = p.conj() / p.norm();
        Self {
            amplitudes: self.amplitudes.iter().map(|z| z * phase).collect(),
        }
    }

    /// Real parts after gauge fixing, renormalized; also returns the norm of
    /// the discarded imaginary parts relative to the state norm.
    pub fn to_real_unit(&self) -> (Vec<f64>, f64) {
        let g = self.gauge_fixed().normalized();
        let imag = g.amplitudes.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
        let mut v: Vec<f64> = g.amplitudes.iter().map(|z| z.re).collect();
        vecops::normalize(&mut v);
        (v, imag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub x: f64,
    /// `<psi|H(x)|psi> / <psi|psi>` with the unscaled `G`.
    pub rayleigh: f64,
    pub norm: f64,
    pub overlap: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnealTrace {
    pub points: Vec<TracePoint>,
}

impl AnnealTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,x,rayleigh,norm,overlap\n");
        for p in &self.points {
            let _ = write!(s, "{},{},{},{},", p.t, p.x, p.rayleigh, p.norm);
            if let Some(o) = p.overlap {
                let _ = write!(s, "{o}");
            }
            s.push('\n');
        }
        s
    }

    pub fn last(&self) -> Option<&TracePoint> {
        self.points.last()
    }
}

/// `|phi0>` for the given dimension.
pub fn initial_state(h0: &InitialHamiltonian, n: usize) -> Result<StateVector> {
    h0.check_dim(n)?;
    Ok(match &h0.ground {
        GroundState::Basis(i) => {
            let mut amps = vec![ZERO; n];
            amps[*i] = Complex64::new(1.0, 0.0);
            StateVector { amplitudes: amps }
        }
        GroundState::Vector(v) => StateVector::from_real(v),
    })
}

/// `-x (G psi) + (1 - x)(H0 psi)`, with `G` including its scale factor.
pub fn hamiltonian_apply(
    g: &GramOperator,
    h0: &InitialHamiltonian,
    x: f64,
    psi: &StateVector,
) -> Result<Vec<Complex64>> {
    if psi.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: psi.dim(),
        });
    }
    h0.check_dim(g.dim())?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!("x = {x} outside [0, 1]")));
    }
    let mut ws = Workspace::new(g.dim());
    let mut out = vec![ZERO; g.dim()];
    ws.apply(g, h0, x, &psi.amplitudes, &mut out);
    Ok(out)
}

/// Bound on `||H(x)||` over the whole schedule.
pub fn hamiltonian_bound(g: &GramOperator, h0: &InitialHamiltonian) -> f64 {
    h0.lambda0
        .max(h0.lambda_exc)
        .max(g.row_sum_bound() / g.scale())
}

/// `Re<psi|G|psi> / <psi|psi>` on the unscaled operator.
pub fn rayleigh_quotient(g: &GramOperator, psi: &StateVector) -> f64 {
    let mut out = vec![ZERO; psi.dim()];
    g.apply_complex_into(&psi.amplitudes, &mut out);
    let num = vecops::cdot(&psi.amplitudes, &out).re * g.scale();
    num / psi.norm().powi(2)
}

/// `|<reference|psi>|`, insensitive to the global phase of either argument.
pub fn fidelity(psi: &StateVector, reference: &StateVector) -> f64 {
    vecops::cdot(&reference.amplitudes, &psi.amplitudes).norm()
}

struct Workspace {
    gpsi: Vec<Complex64>,
    hpsi: Vec<Complex64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            gpsi: vec![ZERO; n],
            hpsi: vec![ZERO; n],
        }
    }

    /// `out = H(x) psi`; leaves `G psi` in `self.gpsi` and `H0 psi` in `self.hpsi`.
    fn apply(
        &mut self,
        g: &GramOperator,
        h0: &InitialHamiltonian,
        x: f64,
        psi: &[Complex64],
        out: &mut [Complex64],
    ) {
        g.apply_complex_into(psi, &mut self.gpsi);
        h0.apply_into(psi, &mut self.hpsi);
        for ((o, gp), hp) in out.iter_mut().zip(&self.gpsi).zip(&self.hpsi) {
            *o = gp * (-x) + hp * (1.0 - x);
        }
    }

    /// Physical energy `<psi|-x G + (1-x) H0|psi>/<psi|psi>` using the
    /// unscaled `G`. Must follow a call to `apply` on the same `psi`.
    fn energy(&self, g: &GramOperator, x: f64, psi: &[Complex64]) -> f64 {
        let gq = vecops::cdot(psi, &self.gpsi).re * g.scale();
        let hq = vecops::cdot(psi, &self.hpsi).re;
        let nn: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        (-x * gq + (1.0 - x) * hq) / nn
    }
}

/// Integrates `i d/dt psi = H(t/T) psi` from `|phi0>` at `t = 0` to `t = T`.
pub fn evolve(
    g: &GramOperator,
    h0: &InitialHamiltonian,
    schedule: &AnnealSchedule,
) -> Result<(StateVector, AnnealTrace)> {
    evolve_with_reference(g, h0, schedule, None)
}

/// As [`evolve`], additionally recording `|<reference|psi>|` (of the
/// normalized state) at every trace point.
pub fn evolve_with_reference(
    g: &GramOperator,
    h0: &InitialHamiltonian,
    schedule: &AnnealSchedule,
    reference: Option<&StateVector>,
) -> Result<(StateVector, AnnealTrace)> {
    schedule.validate()?;
    let n = g.dim();
    if let Some(r) = reference {
        if r.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.dim(),
            });
        }
    }
    let mut psi = initial_state(h0, n)?.amplitudes;
    let h_bound = hamiltonian_bound(g, h0);
    let steps = schedule.step_count(h_bound);
    let total = schedule.total_time;
    let dt = total / steps as f64;

    let mut ws = Workspace::new(n);
    let mut hpsi = vec![ZERO; n];
    let mut next = vec![ZERO; n];
    let mut rhs = vec![ZERO; n];
    let mut trace = AnnealTrace::default();

    let record = |ws: &mut Workspace, psi: &[Complex64], k: usize, trace: &mut AnnealTrace| {
        let t = if k == steps { total } else { k as f64 * dt };
        let x = (t / total).min(1.0);
        let mut scratch = vec![ZERO; n];
        ws.apply(g, h0, x, psi, &mut scratch);
        let nrm = vecops::cnorm(psi);
        let overlap = reference.map(|r| vecops::cdot(&r.amplitudes, psi).norm() / nrm);
        trace.points.push(TracePoint {
            t,
            x,
            rayleigh: ws.energy(g, x, psi),
            norm: nrm,
            overlap,
        });
    };

    let stride = schedule.trace_stride;
    if stride > 0 {
        record(&mut ws, &psi, 0, &mut trace);
    }

    let mut dense = None;
    for k in 0..steps {
        match schedule.integrator {
            Integrator::Euler | Integrator::EulerRenorm => {
                let x = k as f64 * dt / total;
                ws.apply(g, h0, x, &psi, &mut hpsi);
                // psi + (1/i) H psi dt = psi - i dt H psi
                for (p, h) in psi.iter_mut().zip(&hpsi) {
                    *p += Complex64::new(h.im * dt, -h.re * dt);
                }
                let nrm = vecops::cnorm(&psi);
                if schedule.integrator == Integrator::EulerRenorm {
                    psi.iter_mut().for_each(|z| *z /= nrm);
                } else if !(0.5..=2.0).contains(&nrm) {
                    return Err(Error::NormBlowup { step: k + 1, norm: nrm });
                }
            }
            Integrator::Midpoint => {
                let x = (k as f64 + 0.5) * dt / total;
                midpoint_step(
                    g, h0, x, dt, h_bound, &mut ws, &mut psi, &mut hpsi, &mut next, &mut rhs,
                    &mut dense,
                );
            }
        }
        if stride > 0 && ((k + 1) % stride == 0 || k + 1 == steps) {
            record(&mut ws, &psi, k + 1, &mut trace);
        }
    }
    Ok((StateVector { amplitudes: psi }, trace))
}

/// Solves `(I + i dt/2 H) psi' = (I - i dt/2 H) psi` and overwrites `psi`.
///
/// Uses fixed-point iteration when `dt/2 * ||H|| < 1/2`, dense elimination
/// otherwise.
#[allow(clippy::too_many_arguments)]
fn midpoint_step(
    g: &GramOperator,
    h0: &InitialHamiltonian,
    x: f64,
    dt: f64,
    h_bound: f64,
    ws: &mut Workspace,
    psi: &mut Vec<Complex64>,
    hpsi: &mut [Complex64],
    next: &mut Vec<Complex64>,
    rhs: &mut [Complex64],
    dense: &mut Option<Vec<Complex64>>,
) {
    let half = 0.5 * dt;
    // -i * half * v
    let rot = |v: Complex64| Complex64::new(v.im * half, -v.re * half);
    ws.apply(g, h0, x, psi, hpsi);
    for ((r, p), h) in rhs.iter_mut().zip(psi.iter()).zip(hpsi.iter()) {
        *r = p + rot(*h);
    }
    if half * h_bound < 0.5 {
        // predictor: explicit Euler over the full step
        for ((nx, r), h) in next.iter_mut().zip(rhs.iter()).zip(hpsi.iter()) {
            *nx = r + rot(*h);
        }
        let mut prev_delta = f64::INFINITY;
        for _ in 0..100 {
            ws.apply(g, h0, x, next, hpsi);
            let mut delta = 0.0;
            let mut size = 0.0;
            for ((nx, r), h) in next.iter_mut().zip(rhs.iter()).zip(hpsi.iter()) {
                let updated = r + rot(*h);
                delta += (updated - *nx).norm_sqr();
                size += updated.norm_sqr();
                *nx = updated;
            }
            let delta = delta.sqrt();
            if delta <= 1e-16 * size.sqrt() || delta >= prev_delta {
                break;
            }
            prev_delta = delta;
        }
    } else {
        let n = psi.len();
        let m = dense.get_or_insert_with(|| vec![ZERO; n * n]);
        let mut e = vec![ZERO; n];
        let mut col = vec![ZERO; n];
        for j in 0..n {
            e[j] = Complex64::new(1.0, 0.0);
            ws.apply(g, h0, x, &e, &mut col);
            for i in 0..n {
                // I + i half H
                m[i * n + j] = Complex64::new(-col[i].im * half, col[i].re * half);
            }
            m[j * n + j] += 1.0;
            e[j] = ZERO;
        }
        next.copy_from_slice(rhs);
        solve_dense(n, m, next);
    }
    std::mem::swap(psi, next);
}

/// Gaussian elimination with partial pivoting; `a` is destroyed, `b` becomes
/// the solution.
fn solve_dense(n: usize, a: &mut [Complex64], b: &mut [Complex64]) {
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| a[i * n + c].norm().total_cmp(&a[j * n + c].norm()))
            .expect("non-empty range");
        if piv != c {
            for j in 0..n {
                a.swap(c * n + j, piv * n + j);
            }
            b.swap(c, piv);
        }
        let d = a[c * n + c];
        for r in c + 1..n {
            let f = a[r * n + c] / d;
            if f == ZERO {
                continue;
            }
            for j in c..n {
                let t = a[c * n + j];
                a[r * n + j] -= f * t;
            }
            let t = b[c];
            b[r] -= f * t;
        }
    }
    for c in (0..n).rev() {
        let mut s = b[c];
        for j in c + 1..n {
            s -= a[c * n + j] * b[j];
        }
        b[c] = s / a[c * n + c];
    }
}
