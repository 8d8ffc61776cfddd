mod common;

use common::{demo_a, random_matrix, seeded};
use num_complex::Complex64;
use qa_svd::anneal::hamiltonian_bound;
use qa_svd::series::DEFAULT_TAIL_TOL;
use qa_svd::{
    evolve, fidelity, gram, hamiltonian_apply, series_sum, series_terms, AnnealSchedule, GramMode,
    InitialHamiltonian, StateVector,
};
use rand::Rng;

fn scaled_gram(a: &qa_svd::DataMatrix) -> qa_svd::GramOperator {
    let g = gram(a, GramMode::Explicit);
    let s = g.row_sum_bound();
    g.with_scale(s).unwrap()
}

fn stepper(g: &qa_svd::GramOperator, h0: &InitialHamiltonian, t: f64, steps: usize) -> StateVector {
    evolve(g, h0, &AnnealSchedule::new(t).with_steps(steps)).unwrap().0
}

#[test]
fn demo_short_anneal() {
    let g = scaled_gram(&demo_a());
    let h0 = InitialHamiltonian::default();
    let s = series_terms(&g, &h0, 1.0, 200, DEFAULT_TAIL_TOL).unwrap();
    let (psi, _) = series_sum(&s);
    assert!(fidelity(&psi, &stepper(&g, &h0, 1.0, 100_000)) >= 1.0 - 1e-8);

    let s = series_terms(&g, &h0, 5.0, 200, DEFAULT_TAIL_TOL).unwrap();
    let (psi, _) = series_sum(&s.truncated(60));
    assert!(fidelity(&psi, &stepper(&g, &h0, 5.0, 100_000)) >= 1.0 - 1e-6);
}

#[test]
fn random_instances_agree() {
    let mut rng = seeded(20);
    for trial in 0..20 {
        let n = rng.gen_range(2..=6);
        let a = random_matrix(&mut rng, n + 1, n);
        let g = scaled_gram(&a);
        let h0 = InitialHamiltonian::new(1.0, 1.0, rng.gen_range(0..n)).unwrap();
        let t = rng.gen_range(0.5..=10.0) / hamiltonian_bound(&g, &h0);
        let s = series_terms(&g, &h0, t, 400, DEFAULT_TAIL_TOL).unwrap();
        let (psi, prenorm) = series_sum(&s);
        let f = fidelity(&psi, &stepper(&g, &h0, t, 20_000));
        assert!(f >= 1.0 - 1e-6, "trial {trial}: {f}");
        assert!((prenorm - 1.0).abs() < 1e-6, "trial {trial}: {prenorm}");
    }
}

#[test]
fn truncated_series_satisfies_schrodinger_equation() {
    // i d/ds psi = T H(s) psi with psi = sum s^n f_n; match powers of s
    let a = random_matrix(&mut seeded(21), 5, 4);
    let g = scaled_gram(&a);
    let h0 = InitialHamiltonian::default();
    let t = 3.0;
    let s = series_terms(&g, &h0, t, 400, DEFAULT_TAIL_TOL).unwrap();
    let apply = |x: f64, f: &[Complex64]| {
        hamiltonian_apply(&g, &h0, x, &StateVector { amplitudes: f.to_vec() }).unwrap()
    };
    let n_terms = s.order();
    let scale = s.terms.iter().map(|f| StateVector { amplitudes: f.clone() }.norm()).fold(0.0, f64::max);
    for n in 0..n_terms.saturating_sub(1) {
        // H(s) = H0 + s (H(1) - H0)
        let h0f = apply(0.0, &s.terms[n]);
        let lhs: Vec<Complex64> = s.terms[n + 1].iter().map(|z| Complex64::i() * z * (n + 1) as f64).collect();
        let mut rhs: Vec<Complex64> = h0f.iter().map(|z| z * t).collect();
        if n >= 1 {
            let h1 = apply(1.0, &s.terms[n - 1]);
            let h0p = apply(0.0, &s.terms[n - 1]);
            for ((r, a), b) in rhs.iter_mut().zip(h1).zip(h0p) {
                *r += (a - b) * t;
            }
        }
        for (l, r) in lhs.iter().zip(&rhs) {
            assert!((l - r).norm() <= 1e-10 * scale * (n + 1) as f64, "order {n}");
        }
    }
}

#[test]
fn terms_stay_below_recursive_majorant() {
    // b_n = T/n (|H0| b_{n-1} + |G + H0| b_{n-2}) bounds |f_n| by induction
    let mut rng = seeded(22);
    for _ in 0..20 {
        let a = random_matrix(&mut rng, 4, 4);
        let g = scaled_gram(&a);
        let h0 = InitialHamiltonian::new(1.0, rng.gen_range(0.5..2.0), 0).unwrap();
        let h0_norm = h0.lambda0().max(h0.lambda_exc());
        let coupled = g.row_sum_bound() / g.scale() + h0_norm;
        let t = 8.0 / hamiltonian_bound(&g, &h0);
        let s = series_terms(&g, &h0, t, 400, DEFAULT_TAIL_TOL).unwrap();
        let mut b = vec![1.0, t * h0_norm];
        for n in 2..s.terms.len() {
            b.push(t / n as f64 * (h0_norm * b[n - 1] + coupled * b[n - 2]));
        }
        for (n, f) in s.terms.iter().enumerate() {
            let norm = StateVector { amplitudes: f.clone() }.norm();
            assert!(norm <= b[n] * (1.0 + 1e-12), "order {n}: {norm} > {}", b[n]);
        }
    }
}
