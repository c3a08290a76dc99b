use mdd_core::analysis::{
    first_order_gap, grid_minimum, lemma_check, optimize_two_qubit_mdd, GapReport, LemmaReport,
};
use mdd_core::dd::{build_schedule, evolve_with_random_dephasing, evolve_with_schedule, SequenceKind};
use mdd_core::noise::{chi_integral, filter_function, low_frequency_slope, SpectrumKind};
use mdd_core::schedule::{
    alternating_target, insert_dd, qft_scenario, sample_counts, simulate, success_probability,
};
use mdd_core::sqd::{fci_space, noisy_sampler, parse_fcidump, project_and_diagonalize, self_consistent_recovery};
use mdd_core::state::{entanglement_fidelity, haar_random_state_with, reduced_density};
use mdd_core::{BlochVector, DecayRates, PauliExpectations, PureState, SpectralDensity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    Experiment, ExperimentConfig, FidelitySweep, FilterNoise, LemmaCheck, QftToy, SqdRecover, TheoremGap,
    TwoQubitOpt,
};
use crate::error::{CliError, Result};
use crate::output::OutputDir;

/// Verifier findings of a finished run; empty when everything held.
pub type Violations = Vec<String>;

/// Independent random stream `lane` of `seed`.
pub fn stream(seed: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(lane);
    rng
}

pub fn run(config: &ExperimentConfig, out: &mut OutputDir) -> Result<Violations> {
    let seed = config.seed;
    match &config.experiment {
        Experiment::FidelitySweep(c) => fidelity_sweep(c, seed, out),
        Experiment::LemmaCheck(c) => lemma(c, seed, out),
        Experiment::TheoremGap(c) => theorem(c, seed, out),
        Experiment::FilterNoise(c) => filter_noise(c, out),
        Experiment::TwoQubitOpt(c) => two_qubit(c, seed, out),
        Experiment::QftToy(c) => qft(c, seed, out),
        Experiment::SqdRecover(c) => sqd(c, seed, out),
    }
}

#[derive(Serialize)]
struct SweepRow {
    t: f64,
    sequence: String,
    #[serde(rename = "mean_F")]
    mean: f64,
    #[serde(rename = "min_F")]
    min: f64,
    #[serde(rename = "max_F")]
    max: f64,
}

fn fidelity_sweep(c: &FidelitySweep, seed: u64, out: &mut OutputDir) -> Result<Violations> {
    let params = c.noise.params()?;
    let spectrum = c.dephasing.map(|d| SpectralDensity::new(d.spectrum, d.omega_c)).transpose()?;
    // fidelities[state][time][sequence]
    let fidelities: Vec<Vec<Vec<f64>>> = (0..c.states as u64)
        .into_par_iter()
        .map(|s| -> Result<Vec<Vec<f64>>> {
            let mut rng = stream(seed, s);
            let psi: PureState = haar_random_state_with(c.num_qubits, &mut rng)?;
            let exp = PauliExpectations::measure(&psi, c.qubit, c.shots, &mut rng)?;
            c.times
                .iter()
                .map(|&t| {
                    c.sequences
                        .iter()
                        .map(|&kind| {
                            let schedule = build_schedule(kind, t, Some(&exp))?;
                            let rho = match &spectrum {
                                None => evolve_with_schedule(&psi, &schedule, &params, c.qubit)?,
                                Some(sp) => evolve_with_random_dephasing(&psi, &schedule, &params, sp, c.qubit)?,
                            };
                            Ok(entanglement_fidelity(&psi, &rho)?)
                        })
                        .collect()
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (i, &t) in c.times.iter().enumerate() {
        for (k, kind) in c.sequences.iter().enumerate() {
            let values: Vec<f64> = fidelities.iter().map(|f| f[i][k]).collect();
            rows.push(SweepRow {
                t,
                sequence: kind.to_string(),
                mean: values.iter().sum::<f64>() / values.len() as f64,
                min: values.iter().copied().fold(f64::INFINITY, f64::min),
                max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            });
        }
    }
    let values: Vec<f64> = rows.iter().flat_map(|r| [r.t, r.mean, r.min, r.max]).collect();
    out.csv("fidelity_sweep.csv", &rows, values)?;
    Ok(Vec::new())
}

#[derive(Serialize)]
struct LemmaEntry {
    state: usize,
    t: f64,
    #[serde(flatten)]
    report: LemmaReport,
}

fn lemma(c: &LemmaCheck, seed: u64, out: &mut OutputDir) -> Result<Violations> {
    let params = c.noise.params()?;
    let entries: Vec<Vec<LemmaEntry>> = (0..c.states)
        .into_par_iter()
        .map(|s| -> Result<Vec<LemmaEntry>> {
            let mut rng = stream(seed, s as u64);
            // A mixed qubit state from a Haar-random two-qubit purification.
            let psi: PureState = haar_random_state_with(2, &mut rng)?;
            let sigma = reduced_density(&psi, &[0])?;
            c.times
                .iter()
                .map(|&t| {
                    let report = lemma_check(&sigma, &params, t, c.trials, rng.random())?;
                    Ok(LemmaEntry { state: s, t, report })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let entries: Vec<LemmaEntry> = entries.into_iter().flatten().collect();
    out.json("lemma_check.json", &entries)?;
    Ok(entries
        .iter()
        .filter(|e| !e.report.passed)
        .map(|e| format!("state {} at t = {}: {} violations", e.state, e.t, e.report.violations))
        .collect())
}

#[derive(Serialize)]
struct GapEntry {
    state: usize,
    #[serde(flatten)]
    report: GapReport,
}

#[derive(Serialize)]
struct GapRow {
    state: usize,
    sequence: String,
    t: f64,
    f_mdd: f64,
    f_sequence: f64,
    gap: f64,
}

fn theorem(c: &TheoremGap, seed: u64, out: &mut OutputDir) -> Result<Violations> {
    let params = c.noise.params()?;
    let entries: Vec<Vec<GapEntry>> = (0..c.states)
        .into_par_iter()
        .map(|s| -> Result<Vec<GapEntry>> {
            let psi: PureState = haar_random_state_with(c.num_qubits, &mut stream(seed, s as u64))?;
            c.sequences
                .iter()
                .map(|&kind| Ok(GapEntry { state: s, report: first_order_gap(&psi, kind, &params, &c.times, c.qubit)? }))
                .collect()
        })
        .collect::<Result<_>>()?;
    let entries: Vec<GapEntry> = entries.into_iter().flatten().collect();
    let rows: Vec<GapRow> = entries
        .iter()
        .flat_map(|e| {
            e.report.points.iter().map(|p| GapRow {
                state: e.state,
                sequence: e.report.sequence.clone(),
                t: p.t,
                f_mdd: p.f_mdd,
                f_sequence: p.f_sequence,
                gap: p.gap,
            })
        })
        .collect();
    let values: Vec<f64> = rows.iter().flat_map(|r| [r.t, r.f_mdd, r.f_sequence, r.gap]).collect();
    out.csv("theorem_gap.csv", &rows, values)?;
    out.json("theorem_gap.json", &entries)?;
    Ok(entries
        .iter()
        .filter(|e| !e.report.passed)
        .map(|e| format!("state {} vs {}: min gap {:.3e}", e.state, e.report.sequence, e.report.min_gap))
        .collect())
}

#[derive(Serialize)]
struct ChiRow {
    t: f64,
    spectrum: SpectrumKind,
    sequence: String,
    chi: f64,
    coherence: f64,
}

#[derive(Serialize)]
struct SlopeEntry {
    sequence: String,
    flips: usize,
    /// Log-log slope of F between wt = 0.01 and 0.02, or `null` when F there
    /// is within a few orders of the double-precision floor.
    low_frequency_slope: Option<f64>,
}

#[derive(Serialize)]
struct FilterRow {
    sequence: String,
    omega_t: f64,
    filter: f64,
}

/// Below this F(0.01) the phasor cancellation is dominated by rounding.
const FILTER_FLOOR: f64 = 1e-30;

fn filter_noise(c: &FilterNoise, out: &mut OutputDir) -> Result<Violations> {
    // MDD carries no pi pulses, so its filter is free evolution whatever the state.
    let ground_expectations = PauliExpectations::exact(&BlochVector::new(0.0, 0.0, 1.0)?);
    let points: Vec<(SpectrumKind, f64, SequenceKind)> = c
        .spectra
        .iter()
        .flat_map(|&sp| c.times.iter().flat_map(move |&t| c.sequences.iter().map(move |&k| (sp, t, k))))
        .collect();
    let rows: Vec<ChiRow> = points
        .par_iter()
        .map(|&(sp, t, kind)| -> Result<ChiRow> {
            let schedule = build_schedule(kind, t, Some(&ground_expectations))?;
            let chi = chi_integral(&SpectralDensity::new(sp, c.omega_c)?, &schedule.flip_times(), t)?;
            Ok(ChiRow { t, spectrum: sp, sequence: kind.to_string(), chi, coherence: (-chi).exp() })
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = rows.iter().flat_map(|r| [r.t, r.chi, r.coherence]).collect();
    out.csv("filter_noise.csv", &rows, values)?;

    let mut samples = Vec::new();
    let mut slopes = Vec::new();
    for &kind in &c.sequences {
        let flips = build_schedule(kind, 1.0, Some(&ground_expectations))?.flip_times();
        for k in 0..=60 {
            let omega_t = 10f64.powf(-2.0 + k as f64 / 20.0);
            samples.push(FilterRow { sequence: kind.to_string(), omega_t, filter: filter_function(&flips, 1.0, omega_t)? });
        }
        let resolved = filter_function(&flips, 1.0, 1e-2)? > FILTER_FLOOR;
        slopes.push(SlopeEntry {
            sequence: kind.to_string(),
            flips: flips.len(),
            low_frequency_slope: if resolved { Some(low_frequency_slope(&flips, 1.0, 1e-2, 2e-2)?) } else { None },
        });
    }
    out.csv("filter_function.csv", &samples, samples.iter().flat_map(|r| [r.omega_t, r.filter]))?;
    out.json("filter_slopes.json", &slopes)?;
    Ok(Vec::new())
}

#[derive(Serialize)]
struct OptRow {
    instance: usize,
    r_i: f64,
    r_j: f64,
    c1: f64,
    c2: f64,
    c3: f64,
    rate: f64,
    grid_rate: f64,
}

fn two_qubit(c: &TwoQubitOpt, seed: u64, out: &mut OutputDir) -> Result<Violations> {
    let rates = DecayRates::from_noise(&c.noise.params()?, c.gamma_zz)?;
    let rows: Vec<OptRow> = (0..c.instances)
        .into_par_iter()
        .map(|k| -> Result<OptRow> {
            let mut rng = stream(seed, k as u64);
            let (r_i, r_j) = (rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0));
            let (coeffs, rate) = optimize_two_qubit_mdd(r_i, r_j, &rates, rng.random())?;
            let (_, grid_rate) = grid_minimum(r_i, r_j, &rates, c.grid_points)?;
            Ok(OptRow { instance: k, r_i, r_j, c1: coeffs.c1, c2: coeffs.c2, c3: coeffs.c3, rate, grid_rate })
        })
        .collect::<Result<_>>()?;
    let values: Vec<f64> = rows.iter().flat_map(|r| [r.r_i, r.r_j, r.c1, r.c2, r.c3, r.rate, r.grid_rate]).collect();
    out.csv("two_qubit_opt.csv", &rows, values)?;
    Ok(rows
        .iter()
        .filter(|r| r.rate > r.grid_rate + 1e-9)
        .map(|r| format!("instance {}: optimizer {:.6e} above grid {:.6e}", r.instance, r.rate, r.grid_rate))
        .collect())
}

#[derive(Serialize)]
struct QftRow {
    n: usize,
    sequence: String,
    run: usize,
    p_success: f64,
}

#[derive(Serialize)]
struct QftSummary {
    n: usize,
    sequence: String,
    mean: f64,
    std: f64,
}

fn qft(c: &QftToy, seed: u64, out: &mut OutputDir) -> Result<Violations> {
    let noise = c.noise.params()?;
    let jobs: Vec<(usize, SequenceKind, usize)> = c
        .sizes
        .iter()
        .flat_map(|&n| c.sequences.iter().flat_map(move |&k| (0..c.repeats).map(move |r| (n, k, r))))
        .collect();
    let rows: Vec<QftRow> = jobs
        .par_iter()
        .map(|&(n, kind, run)| -> Result<QftRow> {
            let circuit = qft_scenario(n, &c.durations)?;
            // The same run index shares its seeds across sequences.
            let mut rng = stream(seed, (n as u64) << 32 | run as u64);
            let (insert_seed, readout_seed) = (rng.random(), rng.random());
            let with = insert_dd(&circuit, kind, &noise, c.threshold, c.shots, insert_seed)?;
            let counts = sample_counts(&simulate(&with, &noise)?, c.readout_shots, readout_seed)?;
            let p_success = success_probability(&counts, &alternating_target(n))?;
            Ok(QftRow { n, sequence: kind.to_string(), run, p_success })
        })
        .collect::<Result<_>>()?;
    let summary: Vec<QftSummary> = rows
        .chunks(c.repeats)
        .map(|runs| {
            let m = runs.len() as f64;
            let mean = runs.iter().map(|r| r.p_success).sum::<f64>() / m;
            let var = runs.iter().map(|r| (r.p_success - mean).powi(2)).sum::<f64>() / (m - 1.0).max(1.0);
            QftSummary { n: runs[0].n, sequence: runs[0].sequence.clone(), mean, std: var.sqrt() }
        })
        .collect();
    out.csv("qft_toy.csv", &rows, rows.iter().map(|r| r.p_success))?;
    out.csv("qft_toy_summary.csv", &summary, summary.iter().flat_map(|s| [s.mean, s.std]))?;
    Ok(Vec::new())
}

#[derive(Serialize)]
struct RecoveryRow {
    iteration: usize,
    batch: usize,
    #[serde(rename = "E0")]
    energy: f64,
    abs_error: f64,
}

fn sqd(c: &SqdRecover, seed: u64, out: &mut OutputDir) -> Result<Violations> {
    let text = std::fs::read_to_string(&c.fcidump)
        .map_err(|e| CliError::config(format!("{}: {e}", c.fcidump.display())))?;
    let fci = parse_fcidump(&text).map_err(|e| CliError::config(format!("{}: {e}", c.fcidump.display())))?;
    let dets = fci_space(&fci)?;
    let (reference, ground) = project_and_diagonalize(&dets, &fci)?;
    let samples = noisy_sampler(&ground, &dets, fci.norb, c.flip_rate, c.samples, seed)?;
    let recovery = mdd_core::sqd::RecoveryConfig { seed, ..c.recovery };
    let report = self_consistent_recovery(&samples, &fci, &recovery, Some(reference))?;
    let rows: Vec<RecoveryRow> = report
        .iterations
        .iter()
        .flat_map(|it| {
            it.batch_energies.iter().enumerate().map(move |(b, &e)| RecoveryRow {
                iteration: it.iteration,
                batch: b,
                energy: e,
                abs_error: (e - reference).abs(),
            })
        })
        .collect();
    out.csv("sqd_recover.csv", &rows, rows.iter().flat_map(|r| [r.energy, r.abs_error]))?;
    out.json("sqd_recover.json", &report)?;
    Ok(Vec::new())
}
