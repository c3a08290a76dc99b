mod common;

use approx::assert_abs_diff_eq;
use common::{oracle_grid, oracle_rate, random_bloch};
use mdd_core::analysis::{
    decay_rate, first_order_gap, gate_error_delta, geometric_grid, local_entanglement_fidelity, mixed_state_bounds,
    optimize_two_qubit_mdd, pinned_c3_certificate, quadratic_f, two_qubit_decay_rate,
};
use mdd_core::dd::{build_schedule, evolve_with_schedule, mdd_unitary, qdd_times, udd_times, PulseAxis, SequenceKind};
use mdd_core::noise::{apply_local, channel_from_scalars, combined_channel};
use mdd_core::state::{bloch_vector, entanglement_fidelity, haar_random_state, haar_random_unitary, reduced_density};
use mdd_core::{
    AnsatzCoefficients, BlochVector, ChannelScalars, DecayRates, DensityMatrix, ExactAnsatz, NoiseParams,
    PauliExpectations, SingleQubitUnitary,
};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn udd_times_follow_the_sine_squared_rule() {
    let t = 7.0;
    for n in 1..10 {
        let times = udd_times(n, t).unwrap();
        for (k, tj) in times.iter().enumerate() {
            let x = ((k + 1) as f64 * std::f64::consts::PI / (2 * n + 2) as f64).sin();
            assert_abs_diff_eq!(*tj, t * x * x, epsilon = 1e-14);
        }
        // Symmetric about the midpoint.
        for (a, b) in times.iter().zip(times.iter().rev()) {
            assert_abs_diff_eq!(a + b, t, epsilon = 1e-13);
        }
    }
}

#[test]
fn qdd_nests_x_pulses_in_every_gap() {
    let n = 4;
    let t = 10.0;
    let pulses = qdd_times(n, t).unwrap();
    assert_eq!(pulses.len(), n * (n + 2));
    assert_eq!(pulses.iter().filter(|p| p.1 == PulseAxis::Y).count(), n);
    assert!(pulses.windows(2).all(|w| w[0].0 < w[1].0));
    let outer = udd_times(n, t).unwrap();
    let ys: Vec<f64> = pulses.iter().filter(|p| p.1 == PulseAxis::Y).map(|p| p.0).collect();
    assert_eq!(ys, outer);
}

#[test]
fn every_sequence_closes_to_the_identity() {
    let exp = PauliExpectations::exact(&BlochVector::new(0.3, 0.5, -0.2).unwrap());
    for name in ["none", "mdd", "xx", "xy4", "udd1", "udd2", "udd7", "udd8", "qdd2", "qdd4", "mdd+xx"] {
        let kind: SequenceKind = name.parse().unwrap();
        let schedule = build_schedule(kind, 12.0, Some(&exp)).unwrap();
        let net = schedule.net_unitary();
        // Odd UDD orders end flipped and are the only exception.
        let expect_identity = !matches!(kind, SequenceKind::Udd(n) if n % 2 == 1);
        assert_eq!(net.is_identity_up_to_phase(1e-12), expect_identity, "{name}");
        assert_eq!(kind.to_string(), name);
    }
}

#[test]
fn xx_schedule_equals_hand_composed_channels() {
    let params = NoiseParams::new(250.0, 170.0).unwrap();
    let psi = haar_random_state::<f64>(2, 5).unwrap();
    let t = 60.0;
    let x = SingleQubitUnitary::x();
    let idle = |rho: &DensityMatrix, dt: f64| apply_local(&combined_channel(&params, dt).unwrap(), rho, 1).unwrap();
    let mut rho = idle(&psi.to_density(), t / 4.0);
    rho = rho.conjugate(x.matrix(), &[1]).unwrap();
    rho = idle(&rho, t / 2.0);
    rho = rho.conjugate(x.matrix(), &[1]).unwrap();
    rho = idle(&rho, t / 4.0);
    let schedule = build_schedule(SequenceKind::Xx, t, None).unwrap();
    let ours = evolve_with_schedule(&psi, &schedule, &params, 1).unwrap();
    assert!(ours.matrix().max_abs_diff(rho.matrix()) < 1e-14);
}

#[test]
fn mdd_diagonalizes_the_reduced_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..50 {
        let b = random_bloch(&mut rng);
        let u = mdd_unitary(&PauliExpectations::exact(&b));
        let rotated = b.to_density().conjugate(u.matrix(), &[0]).unwrap();
        let m = rotated.matrix();
        assert!(m[(0, 1)].norm() < 1e-13);
        assert!(m[(0, 0)].re >= m[(1, 1)].re);
        assert_abs_diff_eq!(m[(0, 0)].re - m[(1, 1)].re, b.r(), epsilon = 1e-13);
    }
}

#[test]
fn mdd_beats_a_dense_angle_scan() {
    let params = NoiseParams::new(250.0, 170.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let b = random_bloch(&mut rng);
        let sigma = b.to_density();
        let t = rng.random_range(1.0..600.0);
        let ch = combined_channel(&params, t).unwrap();
        let mdd = local_entanglement_fidelity(&sigma, &ch, &mdd_unitary(&PauliExpectations::exact(&b))).unwrap();
        for i in 0..=60 {
            for j in 0..60 {
                let theta = std::f64::consts::PI * i as f64 / 60.0;
                let phi = 2.0 * std::f64::consts::PI * j as f64 / 60.0;
                let u = SingleQubitUnitary::from_angles(theta, phi);
                assert!(local_entanglement_fidelity(&sigma, &ch, &u).unwrap() <= mdd + 1e-12);
            }
        }
    }
}

#[test]
fn decay_rate_is_the_initial_slope_of_the_fidelity() {
    let params = NoiseParams::new(250.0, 170.0).unwrap();
    let rates = DecayRates::from_noise(&params, 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let sigma = random_bloch(&mut rng).to_density();
        let u: SingleQubitUnitary = haar_random_unitary(&mut rng);
        let h = 1e-4;
        let f = |t: f64| local_entanglement_fidelity(&sigma, &combined_channel(&params, t).unwrap(), &u).unwrap();
        // One-sided, second order.
        let slope = (-3.0 * f(0.0) + 4.0 * f(h) - f(2.0 * h)) / (2.0 * h);
        let gamma = decay_rate(&sigma, &u, &rates).unwrap();
        assert!((gamma + slope).abs() <= 1e-6 * gamma.abs().max(1e-9), "{gamma} vs {}", -slope);
    }
}

#[test]
fn gate_error_is_the_leading_term_of_a_small_misrotation() {
    let sc = ChannelScalars::from_params(&NoiseParams::new(250.0, 170.0).unwrap(), 80.0).unwrap();
    for &r in &[0.2, 0.6, 0.95] {
        let exact = |delta: f64| quadratic_f(r, r, &sc) - quadratic_f(r * delta.cos(), r, &sc);
        for &delta in &[1e-2, 1e-3] {
            let lead = gate_error_delta(r, delta, &sc);
            assert!((exact(delta) - lead).abs() <= 1e-3 * lead.abs() + 1e-15, "r {r} delta {delta}");
        }
    }
}

#[test]
fn mixed_state_bounds_bracket_the_simulation() {
    let params = NoiseParams::new(250.0, 170.0).unwrap();
    for seed in 0..10 {
        let psi = haar_random_state::<f64>(3, seed).unwrap();
        let sigma = reduced_density(&psi, &[0]).unwrap();
        let b = bloch_vector(&sigma).unwrap();
        let u = mdd_unitary(&PauliExpectations::exact(&b));
        let sigma_d = sigma.conjugate(u.matrix(), &[0]).unwrap();
        let sigma_d = DensityMatrix::new(mdd_core::CMatrix::from_diagonal(&sigma_d.matrix().diagonal())).unwrap();
        for &t in &[5.0, 50.0, 300.0] {
            let schedule = build_schedule(SequenceKind::Mdd, t, Some(&PauliExpectations::exact(&b))).unwrap();
            let f = entanglement_fidelity(&psi, &evolve_with_schedule(&psi, &schedule, &params, 0).unwrap()).unwrap();
            let bounds = mixed_state_bounds(&sigma_d, &combined_channel(&params, t).unwrap()).unwrap();
            assert!(bounds.lower <= f + 1e-12 && f <= bounds.upper + 1e-12, "{bounds:?} vs {f}");
        }
    }
}

#[test]
fn maximally_mixed_bounds_have_closed_forms() {
    for &(p, g) in &[(0.1, 0.9), (0.5, 0.5), (0.93, 0.2)] {
        let sc = ChannelScalars::new(p, g).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        let bounds = mixed_state_bounds(&mixed, &channel_from_scalars(sc)).unwrap();
        assert_abs_diff_eq!(bounds.upper, (1.0 + (1.0 - p * p).sqrt()) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bounds.lower, (2.0 - p + 2.0 * g * (1.0 - p).sqrt()) / 4.0, epsilon = 1e-12);
    }
}

/// Objective written out from scratch for the grid oracle.
#[test]
fn optimizer_is_not_beaten_by_a_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in 0..8 {
        let g = (rng.random_range(0.0..0.01), rng.random_range(0.0..0.01), rng.random_range(0.0..0.01));
        let (ri, rj) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let rates = DecayRates::new(g.0, g.1, g.2).unwrap();
        let (c, v) = optimize_two_qubit_mdd(ri, rj, &rates, k).unwrap();
        assert!(c.is_feasible_within(1e-12));
        assert_abs_diff_eq!(two_qubit_decay_rate(&c, ri, rj, &rates).unwrap(), v, epsilon = 1e-15);
        assert_abs_diff_eq!(oracle_rate([c.c1, c.c2, c.c3], ri, rj, g.0, g.1, g.2), v, epsilon = 1e-15);
        assert!(v <= oracle_grid(ri, rj, g, 101) + 1e-9);
    }
}

#[test]
fn pure_product_inputs_need_no_decay() {
    let rates = DecayRates::new(0.004, 0.003, 0.002).unwrap();
    let (c, v) = optimize_two_qubit_mdd(1.0, 1.0, &rates, 0).unwrap();
    assert_eq!((c.c1, c.c2, c.c3), (1.0, 1.0, 1.0));
    assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
}

#[test]
fn pinning_c3_at_one_is_exactly_infeasible() {
    let cert = pinned_c3_certificate(Ratio::new(1i64, 1)).unwrap();
    assert_eq!(cert.constraints, (1, 2));
    assert!(pinned_c3_certificate(Ratio::new(-1i64, 1)).is_some());
    assert!(pinned_c3_certificate(Ratio::new(99i64, 100)).is_none());
    // Any (c1, c2) on a fine rational lattice fails with c3 = 1.
    for a in -10..=10 {
        for b in -10..=10 {
            let c = ExactAnsatz::new(Ratio::new(a, 10), Ratio::new(b, 10), Ratio::new(1, 1));
            assert!(!c.is_strictly_feasible());
        }
    }
    let _: AnsatzCoefficients = AnsatzCoefficients::new(0.0, 0.0, 0.0);
}

#[test]
fn toggling_frame_average_is_second_order() {
    let params = NoiseParams::new(250.0, 170.0).unwrap();
    let psi = haar_random_state::<f64>(3, 2).unwrap();
    let grid = geometric_grid(0.5, 2.0, 8);
    for kind in [SequenceKind::Xx, SequenceKind::Udd(8), SequenceKind::Xy4] {
        let report = first_order_gap(&psi, kind, &params, &grid, 1).unwrap();
        for p in &report.points {
            assert!(p.averaging_residual <= (p.t / 100.0).powi(2), "{kind} {p:?}");
        }
    }
}
