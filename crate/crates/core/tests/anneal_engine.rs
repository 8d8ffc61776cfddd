mod common;

use common::{demo_a, random_matrix, seeded};
use num_complex::Complex64;
use qa_svd::{
    evolve, fidelity, gram, hamiltonian_apply, AnnealSchedule, DataMatrix, GramMode, GramOperator,
    InitialHamiltonian, Integrator, StateVector,
};

fn demo_g() -> GramOperator {
    let g = gram(&demo_a(), GramMode::Explicit);
    let s = g.row_sum_bound();
    g.with_scale(s).unwrap()
}

fn top_vector() -> StateVector {
    let h = 1.0 / 2f64.sqrt();
    let d = qa_svd::full_diagonalize(&gram(&demo_a(), GramMode::Explicit)).unwrap();
    assert!(common::overlap(&d.eigenvectors[0], &[h, h]) > 0.9999);
    StateVector::from_real(&d.eigenvectors[0])
}

#[test]
fn demo_reaches_top_vector() {
    let (psi, _) = evolve(&demo_g(), &InitialHamiltonian::default(), &AnnealSchedule::new(1000.0)).unwrap();
    assert!(fidelity(&psi, &top_vector()) >= 0.999);
    let (v, _) = psi.to_real_unit();
    let h = 1.0 / 2f64.sqrt();
    assert!(v.iter().all(|x| (x.abs() - h).abs() < 5e-3));
}

#[test]
fn fidelity_grows_with_anneal_time() {
    let target = top_vector();
    let mut last = 0.0;
    for t in [10.0, 30.0, 100.0, 300.0, 1000.0] {
        let (psi, _) = evolve(&demo_g(), &InitialHamiltonian::default(), &AnnealSchedule::new(t)).unwrap();
        let f = fidelity(&psi, &target);
        assert!(f >= last - 1e-3, "T = {t}: {f} < {last}");
        last = f;
    }
}

#[test]
fn midpoint_agrees_with_renormalized_euler() {
    let h0 = InitialHamiltonian::default();
    let schedule = AnnealSchedule::new(1000.0).with_steps(1_000_000);
    let (mid, _) = evolve(&demo_g(), &h0, &schedule).unwrap();
    let (eu, _) = evolve(&demo_g(), &h0, &schedule.clone().with_integrator(Integrator::EulerRenorm)).unwrap();
    assert!(fidelity(&mid, &eu) >= 1.0 - 1e-6);
    assert!((mid.norm() - 1.0).abs() <= 1e-9);
}

#[test]
fn euler_is_first_order() {
    let g = demo_g();
    let h0 = InitialHamiltonian::default();
    let t = 10.0;
    let (reference, _) = evolve(&g, &h0, &AnnealSchedule::new(t).with_steps(1_000_000)).unwrap();
    let error = |n: usize| {
        let (psi, _) = evolve(&g, &h0, &AnnealSchedule::new(t).with_steps(n).with_integrator(Integrator::Euler)).unwrap();
        psi.amplitudes.iter().zip(&reference.amplitudes).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    };
    let (e1, e4) = (error(4000), error(16000));
    let ratio = e1 / e4;
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn commuting_case_keeps_initial_state() {
    let a = DataMatrix::from_rows(&[vec![2.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 0.5]]).unwrap();
    let g = gram(&a, GramMode::Explicit);
    let (psi, _) = evolve(&g, &InitialHamiltonian::default(), &AnnealSchedule::new(50.0)).unwrap();
    assert!((fidelity(&psi, &StateVector::from_real(&[1.0, 0.0, 0.0])) - 1.0).abs() <= 1e-9);
}

#[test]
fn apply_matches_dense_assembly() {
    let a = random_matrix(&mut seeded(40), 4, 3);
    let g = gram(&a, GramMode::Implicit);
    let dense = gram(&a, GramMode::Explicit).to_dense();
    let h0 = InitialHamiltonian::new(1.0, 2.0, 1).unwrap();
    let h0_diag = [2.0, -1.0, 2.0];
    let psi = StateVector {
        amplitudes: vec![Complex64::new(0.3, -0.1), Complex64::new(-0.5, 0.7), Complex64::new(0.2, 0.4)],
    };
    let out = hamiltonian_apply(&g, &h0, 0.5, &psi).unwrap();
    for i in 0..3 {
        let mut expect = 0.5 * h0_diag[i] * psi.amplitudes[i];
        for j in 0..3 {
            expect -= 0.5 * dense[i * 3 + j] * psi.amplitudes[j];
        }
        assert!((out[i] - expect).norm() <= 1e-12);
    }
}

#[test]
fn trace_reports_physical_energy() {
    let (_, trace) = evolve(
        &demo_g(),
        &InitialHamiltonian::default(),
        &AnnealSchedule::new(1000.0).with_trace_stride(500),
    )
    .unwrap();
    let first = &trace.points[0];
    assert_eq!((first.t, first.x, first.rayleigh), (0.0, 0.0, -1.0));
    let last = trace.last().unwrap();
    assert_eq!(last.t, 1000.0);
    assert!((last.rayleigh + 1.41754).abs() < 1e-3);
    assert!(trace.points.windows(2).all(|w| w[0].t < w[1].t));
}
