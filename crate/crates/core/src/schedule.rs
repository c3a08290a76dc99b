//! Time-sliced circuits with idle intervals, DD insertion and noisy
//! simulation.
//!
//! A circuit is a list of slices. Gates in a slice act at its start; qubits
//! that carry no gate and are not marked as occupied idle for the slice
//! duration under the combined relaxation and dephasing channel. Inserted DD
//! pulses live in zero-duration slices.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::distr::weighted::WeightedIndex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::dd::{build_schedule, mdd_unitary, PauliExpectations, PulseGate, SequenceKind};
use crate::error::{Error, Result};
use crate::linalg::{c, pauli, CMatrix};
use crate::noise::{combined_channel, NoiseParams};
use crate::state::{fidelity, DensityMatrix, PureState, MAX_MIXED_QUBITS};

/// Idle threshold in µs below which no sequence is inserted.
pub const DEFAULT_THRESHOLD: f64 = 0.24;

/// Largest register accepted by [`ScheduledCircuit`] itself; simulation is
/// limited further to [`MAX_MIXED_QUBITS`].
pub const MAX_CIRCUIT_QUBITS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum GateKind {
    H,
    X,
    Y,
    Cp {
        lambda: f64,
    },
    /// Row-major matrix of `[re, im]` pairs, 2x2 or 4x4.
    Custom {
        matrix: Vec<Vec<[f64; 2]>>,
    },
}

impl GateKind {
    pub fn custom(m: &CMatrix<f64>) -> Self {
        let matrix = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect();
        GateKind::Custom { matrix }
    }

    pub fn arity(&self) -> Result<usize> {
        match self {
            GateKind::H | GateKind::X | GateKind::Y => Ok(1),
            GateKind::Cp { .. } => Ok(2),
            GateKind::Custom { matrix } => match matrix.len() {
                2 => Ok(1),
                4 => Ok(2),
                d => Err(Error::arg(format!("custom gate of dimension {d}"))),
            },
        }
    }

    pub fn matrix(&self) -> Result<CMatrix<f64>> {
        let m = match self {
            GateKind::H => pauli::hadamard(),
            GateKind::X => pauli::x(),
            GateKind::Y => pauli::y(),
            GateKind::Cp { lambda } => pauli::controlled_phase(*lambda),
            GateKind::Custom { matrix } => {
                let d = matrix.len();
                if matrix.iter().any(|row| row.len() != d) {
                    return Err(Error::arg("custom gate matrix is not square"));
                }
                let m = CMatrix::from_fn(d, d, |i, j| c(matrix[i][j][0], matrix[i][j][1]));
                if !m.is_unitary(1e-9) {
                    return Err(Error::arg("custom gate matrix is not unitary"));
                }
                m
            }
        };
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    #[serde(flatten)]
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Self {
        Self { kind, qubits }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    /// Duration in µs.
    pub duration: f64,
    #[serde(default)]
    pub gates: Vec<Gate>,
    /// Qubits busy with a gate started in an earlier slice.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub occupied: Vec<usize>,
}

impl Slice {
    pub fn new(duration: f64, gates: Vec<Gate>) -> Self {
        Self {
            duration,
            gates,
            occupied: Vec::new(),
        }
    }

    fn busy(&self) -> impl Iterator<Item = usize> + '_ {
        self.gates.iter().flat_map(|g| g.qubits.iter().copied()).chain(self.occupied.iter().copied())
    }

    /// Whether `q` evolves freely for the duration of this slice.
    pub fn is_idle(&self, q: usize) -> bool {
        self.duration > 0.0 && !self.busy().any(|b| b == q)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduledCircuit {
    pub num_qubits: usize,
    pub slices: Vec<Slice>,
}

impl ScheduledCircuit {
    pub fn new(num_qubits: usize, slices: Vec<Slice>) -> Result<Self> {
        let circuit = Self { num_qubits, slices };
        circuit.validate()?;
        Ok(circuit)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 || self.num_qubits > MAX_CIRCUIT_QUBITS {
            return Err(Error::arg(format!("{} qubits outside 1..={MAX_CIRCUIT_QUBITS}", self.num_qubits)));
        }
        for (k, slice) in self.slices.iter().enumerate() {
            if !(slice.duration >= 0.0 && slice.duration.is_finite()) {
                return Err(Error::arg(format!("slice {k} has duration {}", slice.duration)));
            }
            for gate in &slice.gates {
                if gate.kind.arity()? != gate.qubits.len() {
                    return Err(Error::arg(format!("slice {k}: gate {:?} on {} qubits", gate.kind, gate.qubits.len())));
                }
                gate.kind.matrix()?;
            }
            let mut seen = vec![false; self.num_qubits];
            for q in slice.busy() {
                if q >= self.num_qubits {
                    return Err(Error::arg(format!("slice {k}: qubit {q} out of range")));
                }
                if std::mem::replace(&mut seen[q], true) {
                    return Err(Error::arg(format!("slice {k}: qubit {q} used twice")));
                }
            }
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.slices.iter().map(|s| s.duration).sum()
    }

    /// Start time of every slice.
    pub fn slice_starts(&self) -> Vec<f64> {
        let mut now = 0.0;
        self.slices
            .iter()
            .map(|s| {
                let start = now;
                now += s.duration;
                start
            })
            .collect()
    }

    pub fn gate_count(&self) -> usize {
        self.slices.iter().map(|s| s.gates.len()).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::arg(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let circuit: Self = serde_json::from_str(text).map_err(|e| Error::arg(format!("circuit JSON: {e}")))?;
        circuit.validate()?;
        Ok(circuit)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdleInterval {
    pub qubit: usize,
    pub start: f64,
    pub duration: f64,
}

/// Maximal gate-free runs per qubit longer than `threshold`, sorted by start
/// time then qubit. Zero-duration slices never interrupt a run.
pub fn identify_idle(circuit: &ScheduledCircuit, threshold: f64) -> Result<Vec<IdleInterval>> {
    if !(threshold >= 0.0) {
        return Err(Error::arg(format!("threshold {threshold} is negative")));
    }
    let starts = circuit.slice_starts();
    let mut out = Vec::new();
    for q in 0..circuit.num_qubits {
        let mut run: Option<(f64, f64)> = None;
        for (slice, &start) in circuit.slices.iter().zip(&starts) {
            if slice.duration == 0.0 {
                continue;
            }
            if slice.is_idle(q) {
                let r = run.get_or_insert((start, 0.0));
                r.1 += slice.duration;
            } else if let Some((s, d)) = run.take() {
                if d > threshold {
                    out.push(IdleInterval { qubit: q, start: s, duration: d });
                }
            }
        }
        if let Some((s, d)) = run {
            if d > threshold {
                out.push(IdleInterval { qubit: q, start: s, duration: d });
            }
        }
    }
    out.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.qubit.cmp(&b.qubit)));
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdleStatistics {
    pub intervals: usize,
    pub total_idle: f64,
}

pub fn idle_statistics(circuit: &ScheduledCircuit, threshold: f64) -> Result<IdleStatistics> {
    let intervals = identify_idle(circuit, threshold)?;
    Ok(IdleStatistics {
        intervals: intervals.len(),
        total_idle: intervals.iter().map(|i| i.duration).sum(),
    })
}

struct Event {
    time: f64,
    qubit: usize,
    gate: GateKind,
    /// Interval index and whether this is the closing pulse, for MDD pulses
    /// whose unitary is fixed during the measurement pass.
    mdd: Option<(usize, bool)>,
}

/// Inserts `kind` into every idle interval longer than `threshold`.
///
/// MDD unitaries come from the Pauli expectations of each idle qubit in the
/// noisy simulated state at the start of its interval, exact when `shots` is
/// `None` and binomially sampled otherwise. Intervals are processed in time
/// order, so later measurements see earlier insertions.
pub fn insert_dd(
    circuit: &ScheduledCircuit,
    kind: SequenceKind,
    noise: &NoiseParams<f64>,
    threshold: f64,
    shots: Option<u64>,
    seed: u64,
) -> Result<ScheduledCircuit> {
    circuit.validate()?;
    if kind == SequenceKind::None {
        return Ok(circuit.clone());
    }
    let intervals = identify_idle(circuit, threshold)?;
    let placeholder = PauliExpectations::exact(&crate::state::BlochVector::new(0.0, 0.0, 1.0)?);
    let mut events = Vec::new();
    for (k, iv) in intervals.iter().enumerate() {
        let schedule = build_schedule(kind, iv.duration, Some(&placeholder))?;
        for pulse in schedule.pulses {
            let (gate, mdd) = match pulse.gate {
                PulseGate::X => (GateKind::X, None),
                PulseGate::Y => (GateKind::Y, None),
                PulseGate::Mdd => (GateKind::H, Some((k, false))),
                PulseGate::MddInverse => (GateKind::H, Some((k, true))),
            };
            events.push(Event {
                time: iv.start + pulse.time,
                qubit: iv.qubit,
                gate,
                mdd,
            });
        }
    }
    // Stable sort keeps the pulse order of each interval.
    events.sort_by(|a, b| a.time.total_cmp(&b.time));

    let eps = 1e-9 * circuit.total_duration().max(1.0);
    let mut slices: Vec<Slice> = Vec::new();
    let mut mdd_slots: Vec<(usize, usize, usize, bool)> = Vec::new();
    let mut pending = events.into_iter().peekable();
    let mut emit = |slices: &mut Vec<Slice>, batch: Vec<Event>| {
        for ev in batch {
            let fits = slices
                .last()
                .is_some_and(|s| s.duration == 0.0 && !s.busy().any(|q| q == ev.qubit));
            if !fits {
                slices.push(Slice::new(0.0, Vec::new()));
            }
            let idx = slices.len() - 1;
            let last = slices.last_mut().unwrap();
            if let Some((k, closing)) = ev.mdd {
                mdd_slots.push((idx, last.gates.len(), k, closing));
            }
            last.gates.push(Gate::new(ev.gate, vec![ev.qubit]));
        }
    };
    for (slice, start) in circuit.slices.iter().zip(circuit.slice_starts()) {
        let end = start + slice.duration;
        let mut cursor = start;
        let mut first = true;
        let mut busy: Vec<usize> = slice.busy().collect();
        busy.sort_unstable();
        while let Some(ev) = pending.peek() {
            if slice.duration == 0.0 || ev.time >= end - eps {
                break;
            }
            let t = ev.time.max(cursor);
            let mut batch = Vec::new();
            while pending.peek().is_some_and(|e| e.time <= t + eps) {
                batch.push(pending.next().unwrap());
            }
            if t > cursor + eps {
                slices.push(piece(slice, t - cursor, first, &busy));
                first = false;
                cursor = t;
            }
            emit(&mut slices, batch);
        }
        if slice.duration == 0.0 {
            slices.push(slice.clone());
        } else {
            slices.push(piece(slice, end - cursor, first, &busy));
        }
    }
    emit(&mut slices, pending.collect());

    let mut out = ScheduledCircuit {
        num_qubits: circuit.num_qubits,
        slices,
    };
    if !mdd_slots.is_empty() {
        fill_mdd_unitaries(&mut out, &mdd_slots, &intervals, noise, shots, seed)?;
    }
    out.validate()?;
    Ok(out)
}

/// Part of `slice` lasting `duration`; only the first part carries the gates.
fn piece(slice: &Slice, duration: f64, first: bool, busy: &[usize]) -> Slice {
    if first {
        Slice {
            duration,
            gates: slice.gates.clone(),
            occupied: slice.occupied.clone(),
        }
    } else {
        Slice {
            duration,
            gates: Vec::new(),
            occupied: busy.to_vec(),
        }
    }
}

fn fill_mdd_unitaries(
    circuit: &mut ScheduledCircuit,
    slots: &[(usize, usize, usize, bool)],
    intervals: &[IdleInterval],
    noise: &NoiseParams<f64>,
    shots: Option<u64>,
    seed: u64,
) -> Result<()> {
    check_simulable(circuit.num_qubits)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unitaries: Vec<Option<CMatrix<f64>>> = vec![None; intervals.len()];
    let mut rho = PureState::basis(circuit.num_qubits, 0)?.to_density();
    for idx in 0..circuit.slices.len() {
        for &(slice_idx, gate_idx, k, closing) in slots.iter().filter(|s| s.0 == idx) {
            let u = match (closing, &unitaries[k]) {
                (false, _) => {
                    let exp = PauliExpectations::measure(&rho, intervals[k].qubit, shots, &mut rng)?;
                    let u = mdd_unitary(&exp).matrix().clone();
                    unitaries[k] = Some(u.clone());
                    u
                }
                (true, Some(u)) => u.adjoint(),
                (true, None) => return Err(Error::Numerical("closing MDD pulse without an opening one".into())),
            };
            circuit.slices[slice_idx].gates[gate_idx].kind = GateKind::custom(&u);
        }
        rho = apply_slice(rho, &circuit.slices[idx], noise, circuit.num_qubits)?;
    }
    Ok(())
}

fn check_simulable(n: usize) -> Result<()> {
    if n > MAX_MIXED_QUBITS {
        return Err(Error::arg(format!("{n} qubits exceed the simulation limit of {MAX_MIXED_QUBITS}")));
    }
    Ok(())
}

fn apply_slice(
    mut rho: DensityMatrix<f64>,
    slice: &Slice,
    noise: &NoiseParams<f64>,
    n: usize,
) -> Result<DensityMatrix<f64>> {
    for gate in &slice.gates {
        rho = rho.conjugate(&gate.kind.matrix()?, &gate.qubits)?;
    }
    if slice.duration > 0.0 {
        let channel = combined_channel(noise, slice.duration)?;
        let mut m = rho.into_matrix();
        for q in (0..n).filter(|&q| slice.is_idle(q)) {
            m = channel.apply_on(&m, &[q], n);
        }
        rho = DensityMatrix::from_matrix_unchecked(m)?;
    }
    Ok(rho)
}

/// Runs `circuit` from `initial`: gates as ideal unitaries, then the idle
/// channel on every idle qubit for the slice duration.
pub fn simulate_from(
    circuit: &ScheduledCircuit,
    initial: &DensityMatrix<f64>,
    noise: &NoiseParams<f64>,
) -> Result<DensityMatrix<f64>> {
    circuit.validate()?;
    check_simulable(circuit.num_qubits)?;
    if initial.num_qubits() != circuit.num_qubits {
        return Err(Error::Dimension {
            expected: circuit.num_qubits,
            found: initial.num_qubits(),
        });
    }
    circuit
        .slices
        .iter()
        .try_fold(initial.clone(), |rho, slice| apply_slice(rho, slice, noise, circuit.num_qubits))
}

/// [`simulate_from`] starting in `|0...0>`.
pub fn simulate(circuit: &ScheduledCircuit, noise: &NoiseParams<f64>) -> Result<DensityMatrix<f64>> {
    check_simulable(circuit.num_qubits)?;
    simulate_from(circuit, &PureState::basis(circuit.num_qubits, 0)?.to_density(), noise)
}

/// Noiseless output of `circuit` from `|0...0>`.
pub fn ideal_output(circuit: &ScheduledCircuit) -> Result<DensityMatrix<f64>> {
    simulate(circuit, &NoiseParams::noiseless())
}

/// Fidelity of the noisy output with the noiseless one.
pub fn output_fidelity(circuit: &ScheduledCircuit, noise: &NoiseParams<f64>) -> Result<f64> {
    fidelity(&ideal_output(circuit)?, &simulate(circuit, noise)?)
}

/// Computational-basis samples of `rho`, keyed by bitstring with qubit 0 as
/// the rightmost character.
pub fn sample_counts(rho: &DensityMatrix<f64>, shots: u64, seed: u64) -> Result<BTreeMap<String, u64>> {
    if shots == 0 {
        return Err(Error::arg("shot count must be positive"));
    }
    let n = rho.num_qubits();
    let weights: Vec<f64> = rho.populations().into_iter().map(|p| p.max(0.0)).collect();
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::Numerical(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = vec![0u64; weights.len()];
    for _ in 0..shots {
        hits[dist.sample(&mut rng)] += 1;
    }
    Ok(hits
        .into_iter()
        .enumerate()
        .filter(|(_, h)| *h > 0)
        .map(|(i, h)| (format!("{i:0n$b}").chars().rev().collect(), h))
        .collect())
}

/// `100 * n_target / n_shots`.
pub fn success_probability(counts: &BTreeMap<String, u64>, target: &str) -> Result<f64> {
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(Error::arg("no samples"));
    }
    let hits = counts.get(target).copied().unwrap_or(0);
    Ok(100.0 * hits as f64 / total as f64)
}

/// Exact target population of `rho` in percent.
pub fn target_probability(rho: &DensityMatrix<f64>, target: &str) -> Result<f64> {
    let wires: String = target.chars().rev().collect();
    let index = usize::from_str_radix(&wires, 2).map_err(|_| Error::arg(format!("bad bitstring {target:?}")))?;
    if target.len() != rho.num_qubits() {
        return Err(Error::Dimension {
            expected: rho.num_qubits(),
            found: target.len(),
        });
    }
    Ok(100.0 * rho.populations()[index])
}

/// Slice durations of the toy QFT timeline, in µs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QftDurations {
    pub single_qubit: f64,
    pub two_qubit: f64,
}

impl Default for QftDurations {
    fn default() -> Self {
        Self {
            single_qubit: 5.0,
            two_qubit: 20.0,
        }
    }
}

/// `0101...` of length `n`.
pub fn alternating_target(n: usize) -> String {
    (0..n).map(|k| if k % 2 == 0 { '0' } else { '1' }).collect()
}

/// Hadamards and controlled phases, one gate per slice, without the final
/// qubit reversal: maps `|x>` to the Fourier state with its qubits reversed.
pub fn qft_circuit(n: usize, durations: &QftDurations) -> Result<ScheduledCircuit> {
    if !(2..=MAX_MIXED_QUBITS).contains(&n) {
        return Err(Error::arg(format!("QFT size {n} outside 2..={MAX_MIXED_QUBITS}")));
    }
    if !(durations.single_qubit > 0.0 && durations.two_qubit > 0.0) {
        return Err(Error::arg("QFT slice durations must be positive"));
    }
    let mut slices = Vec::new();
    for j in 0..n {
        slices.push(Slice::new(durations.single_qubit, vec![Gate::new(GateKind::H, vec![j])]));
        for k in j + 1..n {
            let lambda = PI / (1u64 << (k - j)) as f64;
            slices.push(Slice::new(durations.two_qubit, vec![Gate::new(GateKind::Cp { lambda }, vec![j, k])]));
        }
    }
    ScheduledCircuit::new(n, slices)
}

/// Product-state preparation followed by [`qft_circuit`], arranged so that
/// the ideal output is [`alternating_target`].
pub fn qft_scenario(n: usize, durations: &QftDurations) -> Result<ScheduledCircuit> {
    let body = qft_circuit(n, durations)?;
    // Qubit k must end in the character n-1-k of the target.
    let value = u64::from_str_radix(&alternating_target(n), 2).expect("binary digits") as f64;
    let prep: Vec<Gate> = (0..n)
        .map(|k| {
            let phi = -2.0 * PI * value / (1u64 << (k + 1)) as f64;
            let m = &pauli::phase(phi) * &pauli::hadamard();
            Gate::new(GateKind::custom(&m), vec![k])
        })
        .collect();
    let mut slices = vec![Slice::new(durations.single_qubit, prep)];
    slices.extend(body.slices);
    ScheduledCircuit::new(n, slices)
}
