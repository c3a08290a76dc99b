mod common;

use approx::assert_abs_diff_eq;
use common::{max_diff, naive_filter, naive_partial_trace, purification, random_bloch, rk4_relax_dephase, to_dense};
use mdd_core::analysis::local_entanglement_fidelity;
use mdd_core::dd::{udd_times, SequenceKind};
use mdd_core::linalg::pauli;
use mdd_core::noise::{
    apply_local, chi_integral, combined_channel, filter_function, lindblad_derivative, SpectrumKind,
};
use mdd_core::quadrature::{integrate, Tolerance};
use mdd_core::state::{bloch_vector, fidelity, haar_random_state, haar_random_unitary, reduced_density};
use mdd_core::{BlochVector, CMatrix, DensityMatrix, JumpOperator, NoiseParams, PureState, SingleQubitUnitary, SpectralDensity};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn partial_trace_matches_index_bookkeeping() {
    for seed in 0..5 {
        let psi = haar_random_state::<f64>(4, seed).unwrap();
        let rho = to_dense(psi.to_density().matrix());
        for keep in [vec![0], vec![3], vec![1, 2], vec![0, 3], vec![0, 1, 3]] {
            let ours = to_dense(reduced_density(&psi, &keep).unwrap().matrix());
            assert!(max_diff(&ours, &naive_partial_trace(&rho, 4, &keep)) < 1e-14, "keep {keep:?}");
            let from_mixed = to_dense(reduced_density(&psi.to_density(), &keep).unwrap().matrix());
            assert!(max_diff(&from_mixed, &ours) < 1e-14);
        }
    }
}

#[test]
fn bloch_components_are_pauli_expectations() {
    let psi = haar_random_state::<f64>(3, 9).unwrap();
    let sigma = reduced_density(&psi, &[1]).unwrap();
    let b = bloch_vector(&sigma).unwrap();
    for (p, expected) in [(pauli::x(), b.rx), (pauli::y(), b.ry), (pauli::z(), b.rz)] {
        let value = (&p * sigma.matrix()).trace();
        assert_abs_diff_eq!(value.re, expected, epsilon = 1e-14);
        assert_abs_diff_eq!(value.im, 0.0, epsilon = 1e-14);
    }
}

#[test]
fn qubit_fidelity_matches_determinant_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let (a, b) = (random_bloch(&mut rng), random_bloch(&mut rng));
        let det = |v: &BlochVector| (1.0 - v.r() * v.r()) / 4.0;
        let overlap = (1.0 + a.rx * b.rx + a.ry * b.ry + a.rz * b.rz) / 2.0;
        let expected = overlap + 2.0 * (det(&a) * det(&b)).sqrt();
        let ours = fidelity(&a.to_density(), &b.to_density()).unwrap();
        assert_abs_diff_eq!(ours, expected, epsilon = 1e-10);
    }
}

#[test]
fn channel_solves_the_master_equation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let t1 = rng.random_range(20.0..400.0);
        let t2 = rng.random_range(5.0..2.0 * t1);
        let params = NoiseParams::new(t1, t2).unwrap();
        let t = rng.random_range(1.0..300.0);
        let b = random_bloch(&mut rng);
        let rho = b.to_density();
        let m = rho.matrix();
        let start = [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]];
        let reference = rk4_relax_dephase(start, 1.0 / t1, 1.0 / params.tp(), t, 4000);
        let out = apply_local(&combined_channel(&params, t).unwrap(), &rho, 0).unwrap();
        let ours = to_dense(out.matrix());
        let refd: Vec<Vec<Complex64>> = reference.iter().map(|r| r.to_vec()).collect();
        assert!(max_diff(&ours, &refd) < 1e-10, "T1 {t1} T2 {t2} t {t}");
    }
}

#[test]
fn lindblad_generator_matches_hand_derivative() {
    let rho = BlochVector::new(0.3, -0.4, 0.2).unwrap().to_density();
    let (g1, gphi) = (0.02, 0.05);
    let jumps = [
        JumpOperator::relaxation(0, g1).unwrap(),
        JumpOperator::dephasing(0, gphi / 2.0).unwrap(),
    ];
    let d = lindblad_derivative(&rho, &CMatrix::zeros(2, 2), &jumps).unwrap();
    let m = rho.matrix();
    assert_abs_diff_eq!(d[(0, 0)].re, g1 * m[(1, 1)].re, epsilon = 1e-15);
    assert_abs_diff_eq!(d[(1, 1)].re, -g1 * m[(1, 1)].re, epsilon = 1e-15);
    let expected = -(0.5 * g1 + gphi) * m[(0, 1)];
    assert!((d[(0, 1)] - expected).norm() < 1e-15);
}

#[test]
fn haar_states_have_the_right_moments() {
    let samples = 20_000;
    let (mut m1, mut m2) = (0.0, 0.0);
    for seed in 0..samples {
        let p = haar_random_state::<f64>(2, seed).unwrap().amplitudes()[0].norm_sqr();
        m1 += p;
        m2 += p * p;
    }
    m1 /= samples as f64;
    m2 /= samples as f64;
    // E|a|^2 = 1/d and E|a|^4 = 2/(d(d+1)) for d = 4.
    assert!((m1 - 0.25).abs() < 0.01, "{m1}");
    assert!((m2 - 0.1).abs() < 0.01, "{m2}");
}

#[test]
fn haar_unitaries_are_uniform_on_the_bloch_sphere() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 20_000;
    let mut mean_z = 0.0;
    let mut mean_z2 = 0.0;
    let zero = PureState::basis(1, 0).unwrap().to_density();
    for _ in 0..n {
        let u: SingleQubitUnitary = haar_random_unitary(&mut rng);
        let z = bloch_vector(&zero.conjugate(u.matrix(), &[0]).unwrap()).unwrap().rz;
        mean_z += z;
        mean_z2 += z * z;
    }
    assert!((mean_z / n as f64).abs() < 0.02);
    assert!((mean_z2 / n as f64 - 1.0 / 3.0).abs() < 0.01);
}

/// Purification of a qubit state via its closed-form eigendecomposition.
#[test]
fn local_fidelity_equals_purification_fidelity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = NoiseParams::default();
    for _ in 0..30 {
        let b = random_bloch(&mut rng);
        let psi = purification(&b);
        let sigma = reduced_density(&psi, &[0]).unwrap();
        assert!(max_diff(&to_dense(sigma.matrix()), &to_dense(b.to_density().matrix())) < 1e-12);
        let t = rng.random_range(1.0..200.0);
        let channel = combined_channel(&params, t).unwrap();
        let u: SingleQubitUnitary = haar_random_unitary(&mut rng);
        let rotated = psi.apply(u.matrix(), &[0]).unwrap();
        let out = apply_local(&channel, &rotated, 0).unwrap();
        let back = out.conjugate(&u.matrix().adjoint(), &[0]).unwrap();
        let brute = mdd_core::state::entanglement_fidelity(&psi, &back).unwrap();
        let ours = local_entanglement_fidelity(&sigma, &channel, &u).unwrap();
        assert_abs_diff_eq!(ours, brute, epsilon = 1e-12);
    }
}

#[test]
fn filter_function_matches_the_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in [0usize, 1, 2, 5, 8] {
        let t = 50.0;
        let times = if n == 0 { vec![] } else { udd_times(n, t).unwrap() };
        for _ in 0..20 {
            let w = rng.random_range(1e-3..3.0);
            let ours = filter_function(&times, t, w).unwrap();
            assert!((ours - naive_filter(&times, t, w)).abs() < 1e-9 * (1.0 + ours), "n {n} w {w}");
        }
    }
    assert!(filter_function(&[30.0, 10.0], 50.0, 1.0).is_err());
}

#[test]
fn free_evolution_chi_closed_forms() {
    let wc = 0.1;
    for &t in &[1.0, 10.0, 40.0, 150.0] {
        let ohmic = chi_integral(&SpectralDensity::new(SpectrumKind::Ohmic, wc).unwrap(), &[], t).unwrap();
        let expected = 2.0 * wc / std::f64::consts::PI.sqrt() * (1.0 - (-(wc * t / 2.0).powi(2)).exp());
        assert!((ohmic - expected).abs() < 1e-8 * expected.max(1e-12), "t {t}: {ohmic} vs {expected}");
        let pink = chi_integral(&SpectralDensity::new(SpectrumKind::OneOverF, wc).unwrap(), &[], t).unwrap();
        let a = wc / 2.0;
        let erf = |x: f64| {
            let q = integrate(|s: f64| (-s * s).exp(), 0.0, x, Tolerance::default()).unwrap();
            2.0 / std::f64::consts::PI.sqrt() * q.value
        };
        let expected = 2.0 * (t * erf(a * t) + ((-(a * t).powi(2)).exp() - 1.0) / (a * std::f64::consts::PI.sqrt()));
        assert!((pink - expected).abs() < 1e-8 * expected, "t {t}: {pink} vs {expected}");
    }
}

#[test]
fn quadrature_handles_smooth_and_peaked_integrands() {
    let q = integrate(|x: f64| x.sin(), 0.0, std::f64::consts::PI, Tolerance::default()).unwrap();
    assert_abs_diff_eq!(q.value, 2.0, epsilon = 1e-12);
    let q = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, Tolerance::default()).unwrap();
    assert_abs_diff_eq!(q.value, 2.0 / 1e-2 * (1.0f64 / 1e-2).atan(), epsilon = 1e-8);
}

#[test]
fn sequences_without_noise_are_the_identity() {
    let psi = haar_random_state::<f64>(2, 1).unwrap();
    let rho: DensityMatrix = psi.to_density();
    let exp = mdd_core::PauliExpectations::exact(&bloch_vector(&reduced_density(&psi, &[0]).unwrap()).unwrap());
    for kind in ["none", "mdd", "xx", "xy4", "udd8", "qdd2", "mdd+xx"] {
        let kind: SequenceKind = kind.parse().unwrap();
        let schedule = mdd_core::dd::build_schedule(kind, 80.0, Some(&exp)).unwrap();
        let out = mdd_core::dd::evolve_with_schedule(&rho, &schedule, &NoiseParams::noiseless(), 0).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-12, "{kind}");
    }
}
