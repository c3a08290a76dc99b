use clap::ValueEnum;
use mdd_core::analysis::{
    decay_rate, first_order_gap, lemma_check, local_entanglement_fidelity, mixed_state_bounds, quadratic_f,
};
use mdd_core::dd::{build_schedule, evolve_with_schedule, mdd_unitary, SequenceKind};
use mdd_core::noise::{channel_from_scalars, combined_channel};
use mdd_core::state::{bloch_vector, entanglement_fidelity, haar_random_state_with, haar_random_unitary, reduced_density};
use mdd_core::{
    ChannelScalars, CMatrix, DecayRates, DensityMatrix, NoiseParams, PauliExpectations, PureState, SingleQubitUnitary,
};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::default_times;
use crate::error::Result;
use crate::experiments::stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// MDD beats 10^4 Haar-random unitaries on random mixed qubits.
    Lemma,
    /// MDD fidelity gap against XX, XY4, UDD8 and QDD2 on 4-qubit states.
    Theorem,
    /// Variance decay rate against finite differences, and its minimum.
    Decay,
    /// Mixed-state fidelity bounds around simulated MDD.
    Bounds,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `value <= limit`.
    fn at_most(name: &'static str, value: f64, limit: f64) -> Self {
        Self { name, value, limit, passed: value <= limit }
    }
}

#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

pub fn run(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let params = NoiseParams::default();
    let checks = match suite {
        Suite::Lemma => lemma(&params, seed)?,
        Suite::Theorem => theorem(&params, seed)?,
        Suite::Decay => decay(seed)?,
        Suite::Bounds => bounds(&params, seed)?,
    };
    let passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport { suite, seed, checks, passed })
}

fn random_qubit_state(seed: u64, lane: u64) -> Result<DensityMatrix> {
    let psi: PureState = haar_random_state_with(2, &mut stream(seed, lane))?;
    Ok(reduced_density(&psi, &[0])?)
}

fn lemma(params: &NoiseParams, seed: u64) -> Result<Vec<Check>> {
    let per_state: Vec<(usize, f64)> = (0..20u64)
        .into_par_iter()
        .map(|s| -> Result<(usize, f64)> {
            let sigma = random_qubit_state(seed, s)?;
            let b = bloch_vector(&sigma)?;
            let mut rng = stream(seed, 1 << 32 | s);
            let mut violations = 0;
            let mut closed_form: f64 = 0.0;
            for t in [10.0, 100.0, 500.0] {
                violations += lemma_check(&sigma, params, t, 10_000, rng.random())?.violations;
                let sc = ChannelScalars::from_params(params, t)?;
                let channel = channel_from_scalars(sc);
                for _ in 0..100 {
                    let u: SingleQubitUnitary = haar_random_unitary(&mut rng);
                    let rz = bloch_vector(&sigma.conjugate(u.matrix(), &[0])?)?.rz;
                    let direct = local_entanglement_fidelity(&sigma, &channel, &u)?;
                    closed_form = closed_form.max((quadratic_f(rz, b.r(), &sc) - direct).abs());
                }
            }
            Ok((violations, closed_form))
        })
        .collect::<Result<_>>()?;
    Ok(vec![
        Check::at_most("violations", per_state.iter().map(|p| p.0).sum::<usize>() as f64, 0.0),
        Check::at_most("closed_form_error", per_state.iter().map(|p| p.1).fold(0.0, f64::max), 1e-10),
    ])
}

fn theorem(params: &NoiseParams, seed: u64) -> Result<Vec<Check>> {
    let kinds = [SequenceKind::Xx, SequenceKind::Xy4, SequenceKind::Udd(8), SequenceKind::Qdd(2)];
    let times = default_times();
    let reports: Vec<(bool, f64)> = (0..20u64)
        .into_par_iter()
        .map(|s| -> Result<Vec<(bool, f64)>> {
            let psi: PureState = haar_random_state_with(4, &mut stream(seed, s))?;
            kinds
                .iter()
                .map(|&k| {
                    let r = first_order_gap(&psi, k, params, &times, 0)?;
                    Ok((r.passed, r.min_gap))
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let failed = reports.iter().filter(|r| !r.0).count();
    let min_gap = reports.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(vec![
        Check::at_most("failed_gap_reports", failed as f64, 0.0),
        Check { name: "min_gap", value: min_gap, limit: f64::NEG_INFINITY, passed: true },
    ])
}

fn decay(seed: u64) -> Result<Vec<Check>> {
    let results: Vec<(f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|k| -> Result<(f64, f64)> {
            let mut rng = stream(seed, k);
            let t1 = rng.random_range(50.0..500.0);
            let params = NoiseParams::new(t1, rng.random_range(0.2 * t1..=2.0 * t1))?;
            let rates = DecayRates::from_noise(&params, 0.0)?;
            let sigma = random_qubit_state(seed, 1 << 32 | k)?;
            let u: SingleQubitUnitary = haar_random_unitary(&mut rng);
            let f = |t: f64| -> Result<f64> { Ok(local_entanglement_fidelity(&sigma, &combined_channel(&params, t)?, &u)?) };
            let h = 1e-4;
            let slope = (-3.0 * f(0.0)? + 4.0 * f(h)? - f(2.0 * h)?) / (2.0 * h);
            let gamma = decay_rate(&sigma, &u, &rates)?;
            let relative = (gamma + slope).abs() / gamma.abs().max(1e-12);
            let mut excess = f64::NEG_INFINITY;
            if k < 20 {
                let ud = mdd_unitary(&PauliExpectations::exact(&bloch_vector(&sigma)?));
                let at_ud = decay_rate(&sigma, &ud, &rates)?;
                let mut best = f64::INFINITY;
                for _ in 0..10_000 {
                    best = best.min(decay_rate(&sigma, &haar_random_unitary(&mut rng), &rates)?);
                }
                excess = at_ud - best;
            }
            Ok((relative, excess))
        })
        .collect::<Result<_>>()?;
    Ok(vec![
        Check::at_most("finite_difference_relative_error", results.iter().map(|r| r.0).fold(0.0, f64::max), 1e-6),
        Check::at_most("mdd_excess_over_haar_minimum", results.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max), 1e-12),
    ])
}

fn bounds(params: &NoiseParams, seed: u64) -> Result<Vec<Check>> {
    let outside: Vec<f64> = (0..100u64)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let mut rng = stream(seed, k);
            let n = rng.random_range(2..=4);
            let qubit = rng.random_range(0..n);
            let t = rng.random_range(1.0..800.0);
            let psi: PureState = haar_random_state_with(n, &mut rng)?;
            let sigma = reduced_density(&psi, &[qubit])?;
            let exp = PauliExpectations::exact(&bloch_vector(&sigma)?);
            let rotated = sigma.conjugate(mdd_unitary(&exp).matrix(), &[0])?;
            let sigma_d = DensityMatrix::new(CMatrix::from_diagonal(&rotated.matrix().diagonal()))?;
            let schedule = build_schedule(SequenceKind::Mdd, t, Some(&exp))?;
            let f = entanglement_fidelity(&psi, &evolve_with_schedule(&psi, &schedule, params, qubit)?)?;
            let b = mixed_state_bounds(&sigma_d, &combined_channel(params, t)?)?;
            Ok((b.lower - f).max(f - b.upper).max(0.0))
        })
        .collect::<Result<_>>()?;
    let mut closed_form: f64 = 0.0;
    let mut rng = stream(seed, 1 << 32);
    for _ in 0..100 {
        let sc = ChannelScalars::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))?;
        let (p, g) = (sc.p(), sc.gamma_p());
        let b = mixed_state_bounds(&DensityMatrix::maximally_mixed(1)?, &channel_from_scalars(sc))?;
        closed_form = closed_form.max((b.upper - (1.0 + (1.0 - p * p).sqrt()) / 2.0).abs());
        closed_form = closed_form.max((b.lower - (2.0 - p + 2.0 * g * (1.0 - p).sqrt()) / 4.0).abs());
    }
    Ok(vec![
        Check::at_most("distance_outside_bounds", outside.iter().copied().fold(0.0, f64::max), 1e-12),
        Check::at_most("maximally_mixed_closed_form_error", closed_form, 1e-12),
    ])
}
