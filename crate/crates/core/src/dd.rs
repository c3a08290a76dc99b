//! Dynamical decoupling sequences and stroboscopic evolution.
//!
//! Pulses are ideal and instantaneous. Between pulses the noisy qubit evolves
//! under the combined relaxation and dephasing channel.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{chi_integral, combined_channel, dephasing_channel_from_chi, NoiseParams, SpectralDensity};
use crate::scalar::Real;
use crate::state::{bloch_vector, BlochVector, DensityMatrix, QuantumState, SingleQubitUnitary};

/// Shot count used for measured Pauli expectations unless configured.
pub const DEFAULT_SHOTS: u64 = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SequenceKind {
    None,
    Mdd,
    Xx,
    Xy4,
    Udd(usize),
    Qdd(usize),
    MddXx,
}

impl SequenceKind {
    pub fn needs_expectations(&self) -> bool {
        matches!(self, SequenceKind::Mdd | SequenceKind::MddXx)
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceKind::None => write!(f, "none"),
            SequenceKind::Mdd => write!(f, "mdd"),
            SequenceKind::Xx => write!(f, "xx"),
            SequenceKind::Xy4 => write!(f, "xy4"),
            SequenceKind::Udd(n) => write!(f, "udd{n}"),
            SequenceKind::Qdd(n) => write!(f, "qdd{n}"),
            SequenceKind::MddXx => write!(f, "mdd+xx"),
        }
    }
}

impl FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let order = |digits: &str| -> Result<usize> {
            digits
                .parse::<usize>()
                .map_err(|_| Error::arg(format!("bad sequence order in {s:?}")))
        };
        let kind = match s {
            "none" => SequenceKind::None,
            "mdd" => SequenceKind::Mdd,
            "xx" => SequenceKind::Xx,
            "xy4" => SequenceKind::Xy4,
            "mdd+xx" => SequenceKind::MddXx,
            _ if s.starts_with("udd") => SequenceKind::Udd(order(&s[3..])?),
            _ if s.starts_with("qdd") => SequenceKind::Qdd(order(&s[3..])?),
            _ => return Err(Error::arg(format!("unknown sequence {s:?}"))),
        };
        match kind {
            SequenceKind::Udd(0) => Err(Error::arg("udd needs at least one pulse")),
            SequenceKind::Qdd(n) if n < 2 || n % 2 == 1 => Err(Error::arg(format!("qdd order {n} must be even and >= 2"))),
            k => Ok(k),
        }
    }
}

impl TryFrom<String> for SequenceKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SequenceKind> for String {
    fn from(k: SequenceKind) -> String {
        k.to_string()
    }
}

/// Pauli expectations of the idle qubit, exact or estimated from shots.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliExpectations<T> {
    pub ex: T,
    pub ey: T,
    pub ez: T,
    /// `None` for exact values.
    pub shots: Option<u64>,
}

impl<T: Real> PauliExpectations<T> {
    pub fn exact(b: &BlochVector<T>) -> Self {
        Self {
            ex: b.rx,
            ey: b.ry,
            ez: b.rz,
            shots: None,
        }
    }

    /// Estimates each expectation from `shots` binomial +/-1 outcomes.
    pub fn sampled<R: Rng + ?Sized>(b: &BlochVector<T>, shots: u64, rng: &mut R) -> Result<Self> {
        if shots == 0 {
            return Err(Error::arg("shot count must be positive"));
        }
        let mut estimate = |e: T| -> Result<T> {
            let p_plus = ((T::one() + e) * T::half()).max(T::zero()).min(T::one());
            let dist = Binomial::new(shots, p_plus.to_f64_lossy()).map_err(|e| Error::arg(e.to_string()))?;
            let k = dist.sample(rng);
            Ok(T::lit(2.0 * k as f64 / shots as f64 - 1.0))
        };
        Ok(Self {
            ex: estimate(b.rx)?,
            ey: estimate(b.ry)?,
            ez: estimate(b.rz)?,
            shots: Some(shots),
        })
    }

    /// Expectations of `qubit` in `state`; `shots = None` gives exact values.
    pub fn measure<S, R>(state: &S, qubit: usize, shots: Option<u64>, rng: &mut R) -> Result<Self>
    where
        S: QuantumState<T> + ?Sized,
        R: Rng + ?Sized,
    {
        let b = bloch_vector(&state.partial_state(&[qubit])?)?;
        match shots {
            None => Ok(Self::exact(&b)),
            Some(n) => Self::sampled(&b, n, rng),
        }
    }

    pub fn norm(&self) -> T {
        (self.ex * self.ex + self.ey * self.ey + self.ez * self.ez).sqrt()
    }
}

/// `U_d = R_y(-theta_d) R_z(-phi_d)` rotating the Bloch vector onto `+z`, so
/// that `U_d sigma U_d^dagger` is diagonal with descending eigenvalues.
pub fn mdd_unitary<T: Real>(exp: &PauliExpectations<T>) -> SingleQubitUnitary<T> {
    let r = exp.norm();
    if r <= T::epsilon() {
        return SingleQubitUnitary::identity();
    }
    let theta = (exp.ez / r).max(-T::one()).min(T::one()).acos();
    // A vanishing transverse part leaves the azimuth undefined; pick 0 so an
    // already diagonal state maps to the identity.
    let transverse = (exp.ex * exp.ex + exp.ey * exp.ey).sqrt();
    let phi = if transverse <= r * T::validation_tol() {
        T::zero()
    } else {
        exp.ey.atan2(exp.ex)
    };
    SingleQubitUnitary::from_angles(theta, phi)
}

/// `t sin^2(alpha pi / (2n + 2))` for `alpha = 1..n`.
pub fn udd_times<T: Real>(n: usize, t: T) -> Result<Vec<T>> {
    if n < 1 {
        return Err(Error::arg("udd needs at least one pulse"));
    }
    if !(t > T::zero()) {
        return Err(Error::arg(format!("duration {t} must be positive")));
    }
    let denom = T::from_usize(2 * n + 2).unwrap();
    Ok((1..=n)
        .map(|a| t * (T::from_usize(a).unwrap() * T::PI() / denom).sin().powi(2))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PulseAxis {
    X,
    Y,
}

/// Y pulses at the UDD-n times with an X-pulse UDD-n nested in each of the
/// `n + 1` gaps, the outer boundary gaps included.
pub fn qdd_times<T: Real>(n: usize, t: T) -> Result<Vec<(T, PulseAxis)>> {
    if n < 2 || n % 2 == 1 {
        return Err(Error::arg(format!("qdd order {n} must be even and >= 2")));
    }
    let outer = udd_times(n, t)?;
    let mut edges = Vec::with_capacity(n + 2);
    edges.push(T::zero());
    edges.extend(outer.iter().copied());
    edges.push(t);
    let denom = T::from_usize(2 * n + 2).unwrap();
    let mut out = Vec::with_capacity(n * (n + 2));
    for (gap, w) in edges.windows(2).enumerate() {
        let width = w[1] - w[0];
        for j in 1..=n {
            let frac = (T::from_usize(j).unwrap() * T::PI() / denom).sin().powi(2);
            out.push((w[0] + width * frac, PulseAxis::X));
        }
        if gap < n {
            out.push((w[1], PulseAxis::Y));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseGate {
    X,
    Y,
    /// `U_d` opening an MDD interval.
    Mdd,
    /// `U_d^dagger` closing it.
    MddInverse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pulse<T: Real> {
    pub time: T,
    pub gate: PulseGate,
    pub unitary: SingleQubitUnitary<T>,
}

impl<T: Real> Pulse<T> {
    fn pauli(time: T, axis: PulseAxis) -> Self {
        match axis {
            PulseAxis::X => Self {
                time,
                gate: PulseGate::X,
                unitary: SingleQubitUnitary::x(),
            },
            PulseAxis::Y => Self {
                time,
                gate: PulseGate::Y,
                unitary: SingleQubitUnitary::y(),
            },
        }
    }

    /// Whether this is a pi pulse that flips the sign of the dephasing noise.
    pub fn is_flip(&self) -> bool {
        matches!(self.gate, PulseGate::X | PulseGate::Y)
    }
}

/// Pulses of one idle interval `[0, total_time]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule<T: Real> {
    pub total_time: T,
    pub pulses: Vec<Pulse<T>>,
    pub kind: SequenceKind,
}

impl<T: Real> PulseSchedule<T> {
    /// Product `g_m ... g_1` of all pulses.
    pub fn net_unitary(&self) -> SingleQubitUnitary<T> {
        self.pulses
            .iter()
            .fold(SingleQubitUnitary::identity(), |acc, p| p.unitary.compose(&acc))
    }

    /// Times of the pi pulses strictly inside the interval.
    pub fn flip_times(&self) -> Vec<T> {
        self.pulses
            .iter()
            .filter(|p| p.is_flip() && p.time > T::zero() && p.time < self.total_time)
            .map(|p| p.time)
            .collect()
    }
}

/// Builds the pulse list of `kind` over `[0, t]`.
pub fn build_schedule<T: Real>(
    kind: SequenceKind,
    t: T,
    exp: Option<&PauliExpectations<T>>,
) -> Result<PulseSchedule<T>> {
    if !(t >= T::zero()) {
        return Err(Error::arg(format!("duration {t} is negative")));
    }
    let quarter = t * T::lit(0.25);
    let mdd_pair = || -> Result<(Pulse<T>, Pulse<T>)> {
        let e = exp.ok_or_else(|| Error::arg(format!("sequence {kind} requires Pauli expectations")))?;
        let u = mdd_unitary(e);
        Ok((
            Pulse {
                time: T::zero(),
                gate: PulseGate::Mdd,
                unitary: u.clone(),
            },
            Pulse {
                time: t,
                gate: PulseGate::MddInverse,
                unitary: u.adjoint(),
            },
        ))
    };
    let pulses = match kind {
        SequenceKind::None => vec![],
        SequenceKind::Mdd => {
            let (open, close) = mdd_pair()?;
            vec![open, close]
        }
        SequenceKind::Xx => vec![
            Pulse::pauli(quarter, PulseAxis::X),
            Pulse::pauli(t - quarter, PulseAxis::X),
        ],
        SequenceKind::Xy4 => vec![
            Pulse::pauli(T::zero(), PulseAxis::Y),
            Pulse::pauli(quarter, PulseAxis::X),
            Pulse::pauli(t * T::half(), PulseAxis::Y),
            Pulse::pauli(t - quarter, PulseAxis::X),
        ],
        SequenceKind::Udd(n) => {
            if t == T::zero() {
                return Err(Error::arg("udd needs a positive duration"));
            }
            udd_times(n, t)?
                .into_iter()
                .map(|tj| Pulse::pauli(tj, PulseAxis::Y))
                .collect()
        }
        SequenceKind::Qdd(n) => {
            if t == T::zero() {
                return Err(Error::arg("qdd needs a positive duration"));
            }
            qdd_times(n, t)?
                .into_iter()
                .map(|(tj, axis)| Pulse::pauli(tj, axis))
                .collect()
        }
        SequenceKind::MddXx => {
            let (open, close) = mdd_pair()?;
            vec![
                open,
                Pulse::pauli(quarter, PulseAxis::X),
                Pulse::pauli(t - quarter, PulseAxis::X),
                close,
            ]
        }
    };
    Ok(PulseSchedule {
        total_time: t,
        pulses,
        kind,
    })
}

/// Free evolution of `qubit` for each gap, interleaved with the pulses.
pub fn evolve_with_schedule<T: Real, S: QuantumState<T> + ?Sized>(
    state: &S,
    schedule: &PulseSchedule<T>,
    params: &NoiseParams<T>,
    qubit: usize,
) -> Result<DensityMatrix<T>> {
    evolve_pulses(state.to_density_matrix(), &schedule.pulses, schedule.total_time, params, qubit)
}

fn evolve_pulses<T: Real>(
    mut rho: DensityMatrix<T>,
    pulses: &[Pulse<T>],
    end: T,
    params: &NoiseParams<T>,
    qubit: usize,
) -> Result<DensityMatrix<T>> {
    let n = rho.num_qubits();
    if qubit >= n {
        return Err(Error::arg(format!("qubit {qubit} out of range for {n} qubits")));
    }
    let mut now = T::zero();
    let idle = |rho: DensityMatrix<T>, dt: T| -> Result<DensityMatrix<T>> {
        if dt > T::zero() {
            let ch = combined_channel(params, dt)?;
            DensityMatrix::from_matrix_unchecked(ch.apply_on(rho.matrix(), &[qubit], n))
        } else {
            Ok(rho)
        }
    };
    for pulse in pulses {
        if pulse.time < now || pulse.time > end {
            return Err(Error::arg("pulse times must be non-decreasing and within the interval"));
        }
        rho = idle(rho, pulse.time - now)?;
        rho = rho.conjugate(pulse.unitary.matrix(), &[qubit])?;
        now = pulse.time;
    }
    idle(rho, end - now)
}

/// Evolution with relaxation between pulses followed by Gaussian random
/// dephasing `e^{-chi}` filtered by the interior pi pulses. For MDD sequences
/// the dephasing acts in the rotated frame, before the closing `U_d^dagger`.
pub fn evolve_with_random_dephasing<T: Real, S: QuantumState<T> + ?Sized>(
    state: &S,
    schedule: &PulseSchedule<T>,
    params: &NoiseParams<T>,
    spectrum: &SpectralDensity<T>,
    qubit: usize,
) -> Result<DensityMatrix<T>> {
    let t = schedule.total_time;
    let split = schedule
        .pulses
        .iter()
        .position(|p| p.gate == PulseGate::MddInverse)
        .unwrap_or(schedule.pulses.len());
    let (body, tail) = schedule.pulses.split_at(split);
    let rho = evolve_pulses(state.to_density_matrix(), body, t, params, qubit)?;
    let chi = if t > T::zero() {
        chi_integral(spectrum, &schedule.flip_times(), t)?
    } else {
        T::zero()
    };
    let n = rho.num_qubits();
    let dephase = dephasing_channel_from_chi(chi)?;
    let mut rho = DensityMatrix::from_matrix_unchecked(dephase.apply_on(rho.matrix(), &[qubit], n))?;
    for pulse in tail {
        rho = rho.conjugate(pulse.unitary.matrix(), &[qubit])?;
    }
    Ok(rho)
}

/// Cumulative frames `U_alpha = g_alpha ... g_1`, one per pulse.
pub fn toggling_frames<T: Real>(schedule: &PulseSchedule<T>) -> Vec<SingleQubitUnitary<T>> {
    let mut acc = SingleQubitUnitary::identity();
    schedule
        .pulses
        .iter()
        .map(|p| {
            acc = p.unitary.compose(&acc);
            acc.clone()
        })
        .collect()
}

/// Frame in force during each free-evolution gap, with the gap length.
/// Zero-length gaps are skipped.
pub fn gap_frames<T: Real>(schedule: &PulseSchedule<T>) -> Vec<(T, SingleQubitUnitary<T>)> {
    let mut out = Vec::new();
    let mut frame = SingleQubitUnitary::identity();
    let mut now = T::zero();
    for pulse in &schedule.pulses {
        if pulse.time > now {
            out.push((pulse.time - now, frame.clone()));
        }
        frame = pulse.unitary.compose(&frame);
        now = pulse.time;
    }
    if schedule.total_time > now {
        out.push((schedule.total_time - now, frame));
    }
    out
}

/// `U^dagger E^t(U rho U^dagger) U`: evolution of `qubit` sandwiched by `U`.
pub fn evolve_in_frame<T: Real, S: QuantumState<T> + ?Sized>(
    state: &S,
    u: &SingleQubitUnitary<T>,
    params: &NoiseParams<T>,
    t: T,
    qubit: usize,
) -> Result<DensityMatrix<T>> {
    let schedule = PulseSchedule {
        total_time: t,
        pulses: vec![
            Pulse {
                time: T::zero(),
                gate: PulseGate::Mdd,
                unitary: u.clone(),
            },
            Pulse {
                time: t,
                gate: PulseGate::MddInverse,
                unitary: u.adjoint(),
            },
        ],
        kind: SequenceKind::Mdd,
    };
    evolve_with_schedule(state, &schedule, params, qubit)
}
