//! Top-k singular triplets by repeated annealing and deflation.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::anneal::{
    evolve_with_reference, rayleigh_quotient, AnnealSchedule, AnnealTrace, InitialHamiltonian,
    Integrator, StateVector, StepPolicy,
};
use crate::error::{Error, Result};
use crate::matrix::{
    deflate, eigen_residual, gram, left_vector, DataMatrix, GramMode, GramOperator,
    PrincipalComponent,
};
use crate::oracle::full_diagonalize;
use crate::two_level::{time_scale, TwoLevelParams};
use crate::vecops;

/// How `G` is divided before it enters the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ScaleMode {
    /// Divide by the max absolute row sum, an upper bound on `lambda0`.
    #[default]
    RowSum,
    /// Use `G` as is (the physical energy units of the demo).
    Unscaled,
    Fixed(f64),
}

impl ScaleMode {
    pub fn resolve(&self, g: &GramOperator) -> f64 {
        match *self {
            ScaleMode::RowSum => {
                let b = g.row_sum_bound();
                if b > 0.0 {
                    b
                } else {
                    1.0
                }
            }
            ScaleMode::Unscaled => 1.0,
            ScaleMode::Fixed(s) => s,
        }
    }
}

/// Settings shared by every component of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Anneal time per component; `None` picks it from the dimension.
    pub total_time: Option<f64>,
    /// Multiplier on the two-level time scale when `total_time` is `None`.
    pub time_prefactor: f64,
    pub steps: StepPolicy,
    pub integrator: Integrator,
    pub lambda0: f64,
    pub lambda_exc: f64,
    pub ground_index: usize,
    pub scale: ScaleMode,
    /// Accept when `||G v - lambda v|| <= tol * max(lambda, 1)`.
    pub tol: f64,
    /// Total anneals per component; `None` means `n + 1`.
    pub max_attempts: Option<usize>,
    pub seed: u64,
    pub gram_mode: GramMode,
    /// Trace sampling stride for each accepted anneal; 0 records nothing.
    pub trace_stride: usize,
}

pub const DEFAULT_TIME_PREFACTOR: f64 = 50.0;
pub const DEFAULT_TOL: f64 = 1e-2;

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            total_time: None,
            time_prefactor: DEFAULT_TIME_PREFACTOR,
            steps: StepPolicy::Auto,
            integrator: Integrator::Midpoint,
            lambda0: 1.0,
            lambda_exc: 1.0,
            ground_index: 0,
            scale: ScaleMode::RowSum,
            tol: DEFAULT_TOL,
            max_attempts: None,
            seed: 0,
            gram_mode: GramMode::Auto,
            trace_stride: 0,
        }
    }
}

impl PipelineConfig {
    /// Anneal time for an `n`-dimensional problem: the configured value, or
    /// `prefactor * Lambda0 / g^2` with `g` the two-level minimum gap at
    /// `K = 1`, `alpha = 1/sqrt(n)` (the overlap a uniform start would have).
    pub fn total_time_for(&self, n: usize) -> Result<f64> {
        if let Some(t) = self.total_time {
            return Ok(t);
        }
        if n < 2 {
            return Ok(1.0);
        }
        let p = TwoLevelParams::new(1.0, 1.0 / (n as f64).sqrt(), self.lambda0)?;
        Ok(self.time_prefactor * time_scale(&p)?)
    }

    pub fn schedule_for(&self, n: usize) -> Result<AnnealSchedule> {
        Ok(AnnealSchedule {
            total_time: self.total_time_for(n)?,
            steps: self.steps,
            integrator: self.integrator,
            trace_stride: self.trace_stride,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Annealing,
    Oracle,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Ordered by `lambda`, largest first.
    pub components: Vec<PrincipalComponent>,
    pub fidelity_vs_oracle: Option<Vec<f64>>,
    pub restarts: usize,
    pub method: Method,
    /// One trace per component when tracing is enabled.
    pub traces: Vec<AnnealTrace>,
}

/// Outcome of annealing a single component.
#[derive(Debug, Clone)]
pub struct ComponentRun {
    pub component: PrincipalComponent,
    pub restarts: usize,
    /// The normalized final state of the accepted anneal.
    pub state: StateVector,
    pub trace: AnnealTrace,
}

fn initial_hamiltonians(
    cfg: &PipelineConfig,
    n: usize,
) -> Result<impl Iterator<Item = Result<InitialHamiltonian>>> {
    if cfg.ground_index >= n {
        return Err(Error::IndexOutOfRange {
            index: cfg.ground_index,
            dim: n,
        });
    }
    let attempts = cfg.max_attempts.unwrap_or(n + 1);
    let (l0, l1, g0, seed) = (cfg.lambda0, cfg.lambda_exc, cfg.ground_index, cfg.seed);
    Ok((0..attempts).map(move |i| {
        if i < n {
            InitialHamiltonian::new(l0, l1, (g0 + i) % n)
        } else {
            // rotated basis: a random unit vector takes the role of phi0
            let mut rng = StdRng::seed_from_u64(seed.wrapping_add(i as u64));
            let phi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            InitialHamiltonian::with_ground_vector(l0, l1, phi)
        }
    }))
}

/// Anneals toward the top eigenvector of `AᵀA`, restarting from other
/// initial states while the residual stays above tolerance.
pub fn top_component(a: &DataMatrix, cfg: &PipelineConfig) -> Result<ComponentRun> {
    top_component_with_reference(a, cfg, None)
}

/// As [`top_component`], recording the overlap with `reference` in the trace.
pub fn top_component_with_reference(
    a: &DataMatrix,
    cfg: &PipelineConfig,
    reference: Option<&[f64]>,
) -> Result<ComponentRun> {
    let reference = reference.map(StateVector::from_real);
    let g = gram(a, cfg.gram_mode);
    let n = g.dim();
    let scaled = g.with_scale(cfg.scale.resolve(&g))?;
    let schedule = cfg.schedule_for(n)?;
    let mut best = f64::INFINITY;
    for (attempt, h0) in initial_hamiltonians(cfg, n)?.enumerate() {
        let h0 = h0?;
        let (psi, trace) = evolve_with_reference(&scaled, &h0, &schedule, reference.as_ref())?;
        let (v, _) = psi.to_real_unit();
        let lambda = rayleigh_quotient(&g, &StateVector::from_real(&v));
        let residual = eigen_residual(&g, lambda, &v)?;
        if residual <= cfg.tol * lambda.max(1.0) {
            let u = left_vector(a, &v, lambda)?;
            return Ok(ComponentRun {
                component: PrincipalComponent {
                    lambda,
                    sigma: lambda.sqrt(),
                    v,
                    u,
                    residual,
                },
                restarts: attempt,
                state: psi.normalized(),
                trace,
            });
        }
        best = best.min(residual);
    }
    Err(Error::NotConverged {
        component: 0,
        best_residual: best,
    })
}

/// Extracts the `k` leading triplets one at a time, deflating `A` after each.
pub fn top_k(a: &DataMatrix, k: usize, cfg: &PipelineConfig) -> Result<SpectrumResult> {
    top_k_with_references(a, k, cfg, None)
}

/// As [`top_k`]; `references[j]` (e.g. oracle vectors) feeds the overlap
/// column of component `j`'s trace.
pub fn top_k_with_references(
    a: &DataMatrix,
    k: usize,
    cfg: &PipelineConfig,
    references: Option<&[Vec<f64>]>,
) -> Result<SpectrumResult> {
    check_k(a, k)?;
    let mut traces = Vec::new();
    let mut current = a.clone();
    let mut components: Vec<PrincipalComponent> = Vec::with_capacity(k);
    let mut restarts = 0;
    for j in 0..k {
        let reference = references.and_then(|r| r.get(j)).map(Vec::as_slice);
        let run = top_component_with_reference(&current, cfg, reference).map_err(|e| match e {
            Error::NotConverged { best_residual, .. } => Error::NotConverged {
                component: j,
                best_residual,
            },
            other => other,
        })?;
        restarts += run.restarts;
        if cfg.trace_stride > 0 {
            traces.push(run.trace);
        }
        let mut v = run.component.v;
        let basis: Vec<&[f64]> = components.iter().map(|c| c.v.as_slice()).collect();
        vecops::orthogonalize_against(&mut v, &basis);
        vecops::normalize(&mut v);
        vecops::gauge_fix_real(&mut v);
        let g = gram(&current, cfg.gram_mode);
        let lambda = rayleigh_quotient(&g, &StateVector::from_real(&v));
        let c = PrincipalComponent::from_eigenpair(&current, &g, lambda, v)?;
        current = deflate(&current, &c)?;
        components.push(c);
    }
    sort_descending(&mut components);
    Ok(SpectrumResult {
        components,
        fidelity_vs_oracle: None,
        restarts,
        method: Method::Annealing,
        traces,
    })
}

fn check_k(a: &DataMatrix, k: usize) -> Result<()> {
    let max = a.rows().min(a.cols());
    if k == 0 || k > max {
        return Err(Error::InvalidParameter(format!(
            "k must be in 1..={max}, got {k}"
        )));
    }
    Ok(())
}

fn sort_descending(components: &mut [PrincipalComponent]) {
    components.sort_by(|x, y| y.lambda.total_cmp(&x.lambda));
}

/// `||G v - lambda v||` on the unscaled operator.
pub fn residual(g: &GramOperator, c: &PrincipalComponent) -> Result<f64> {
    eigen_residual(g, c.lambda, &c.v)
}

/// The `k` leading triplets from full diagonalization of `AᵀA`.
pub fn oracle_top_k(a: &DataMatrix, k: usize) -> Result<SpectrumResult> {
    check_k(a, k)?;
    let g = gram(a, GramMode::Explicit);
    let d = full_diagonalize(&g)?;
    let components = d
        .eigenvalues
        .into_iter()
        .zip(d.eigenvectors)
        .take(k)
        .map(|(lambda, v)| PrincipalComponent::from_eigenpair(a, &g, lambda, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumResult {
        components,
        fidelity_vs_oracle: None,
        restarts: 0,
        method: Method::Oracle,
        traces: Vec::new(),
    })
}

/// Eigenvalues closer than this fraction of the largest count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Per-component fidelity of `result` against `reference`.
///
/// Component `j` is compared with the whole degenerate cluster containing
/// reference component `j`: the fidelity is the norm of the projection of
/// `v_j` onto that cluster's span.
pub fn fidelity_against(result: &SpectrumResult, reference: &SpectrumResult) -> Vec<f64> {
    let refs = &reference.components;
    let top = refs.first().map_or(0.0, |c| c.lambda.abs());
    result
        .components
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let Some(anchor) = refs.get(j) else {
                return 0.0;
            };
            refs.iter()
                .filter(|r| (r.lambda - anchor.lambda).abs() <= DEGENERACY_TOL * top)
                .map(|r| vecops::dot(&r.v, &c.v).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// JSON form of a [`SpectrumResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub method: Method,
    pub lambda: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub u: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub restarts: usize,
    pub fidelity_vs_oracle: Option<Vec<f64>>,
}

impl From<&SpectrumResult> for SpectrumJson {
    fn from(r: &SpectrumResult) -> Self {
        let c = &r.components;
        Self {
            method: r.method,
            lambda: c.iter().map(|c| c.lambda).collect(),
            singular_values: c.iter().map(|c| c.sigma).collect(),
            v: c.iter().map(|c| c.v.clone()).collect(),
            u: c.iter().map(|c| c.u.clone()).collect(),
            residuals: c.iter().map(|c| c.residual).collect(),
            restarts: r.restarts,
            fidelity_vs_oracle: r.fidelity_vs_oracle.clone(),
        }
    }
}

impl From<SpectrumJson> for SpectrumResult {
    fn from(j: SpectrumJson) -> Self {
        let components = j
            .lambda
            .iter()
            .zip(j.v)
            .zip(j.u)
            .zip(&j.residuals)
            .map(|(((&lambda, v), u), &residual)| PrincipalComponent {
                lambda,
                sigma: lambda.max(0.0).sqrt(),
                v,
                u,
                residual,
            })
            .collect();
        Self {
            components,
            fidelity_vs_oracle: j.fidelity_vs_oracle,
            restarts: j.restarts,
            method: j.method,
            traces: Vec::new(),
        }
    }
}

impl SpectrumResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SpectrumJson::from(self)).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let j: SpectrumJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let n = j.lambda.len();
        if j.v.len() != n || j.u.len() != n || j.residuals.len() != n {
            return Err(Error::Parse("spectrum arrays have different lengths".into()));
        }
        Ok(j.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_a() -> DataMatrix {
        DataMatrix::from_rows(&[
            vec![-0.69, -0.68],
            vec![-0.023, 0.73],
            vec![0.72, -0.043],
        ])
        .unwrap()
    }

    #[test]
    fn residual_examples() {
        let g = gram(&demo_a(), GramMode::Explicit);
        let exact = GramOperator::from_symmetric(2, vec![1.0, 0.43, 0.43, 1.0]).unwrap();
        let r = 1.0 / 2f64.sqrt();
        let pc = |lambda: f64, v: Vec<f64>| PrincipalComponent {
            lambda,
            sigma: lambda.sqrt(),
            v,
            u: vec![],
            residual: 0.0,
        };
        assert!(residual(&exact, &pc(1.43, vec![r, r])).unwrap() <= 1e-12);
        assert!((residual(&exact, &pc(1.43, vec![r, -r])).unwrap() - 0.86).abs() < 1e-12);
        assert!((residual(&exact, &pc(1.0, vec![1.0, 0.0])).unwrap() - 0.43).abs() < 1e-12);
        // the printed demo data gives G01 = 0.42145, not 0.43
        assert!((residual(&g, &pc(1.0, vec![1.0, 0.0])).unwrap() - 0.42145).abs() < 0.005);
    }

    #[test]
    fn default_time_from_two_level_model() {
        let cfg = PipelineConfig::default();
        let t = cfg.total_time_for(2).unwrap();
        // alpha^2 = 1/2, K = 1: g^2 = 16 * 0.25 / 5
        assert!((t - 50.0 / 0.8).abs() < 1e-9);
        assert_eq!(cfg.total_time_for(1).unwrap(), 1.0);
    }

    #[test]
    fn k_bounds() {
        let cfg = PipelineConfig::default();
        assert!(top_k(&demo_a(), 0, &cfg).is_err());
        assert!(top_k(&demo_a(), 3, &cfg).is_err());
        assert!(oracle_top_k(&demo_a(), 3).is_err());
    }

    #[test]
    fn bad_ground_index() {
        let cfg = PipelineConfig {
            ground_index: 4,
            ..Default::default()
        };
        assert!(matches!(
            top_component(&demo_a(), &cfg),
            Err(Error::IndexOutOfRange { index: 4, dim: 2 })
        ));
    }

    #[test]
    fn json_round_trip() {
        let r = oracle_top_k(&demo_a(), 2).unwrap();
        let text = r.to_json();
        let back = SpectrumResult::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
        assert!(text.contains("\"method\": \"oracle\""));
        assert!(text.contains("\"fidelity_vs_oracle\": null"));
        assert!(SpectrumResult::from_json("{}").is_err());
    }

    #[test]
    fn degenerate_cluster_fidelity() {
        let a = DataMatrix::identity(3).unwrap();
        let reference = oracle_top_k(&a, 3).unwrap();
        let r = 1.0 / 2f64.sqrt();
        let mut probe = reference.clone();
        probe.components[0].v = vec![r, 0.0, r];
        let f = fidelity_against(&probe, &reference);
        assert!((f[0] - 1.0).abs() < 1e-12);
    }
}
