//! Local relaxation and dephasing: Kraus channels, Lindblad generators and
//! filter-function dephasing under Ohmic and 1/f spectra.
//!
//! Times are in microseconds and rates in inverse microseconds.

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cr, pauli, CMatrix, C};
use crate::quadrature::{integrate, Tolerance};
use crate::scalar::Real;
use crate::state::{DensityMatrix, QuantumState};

/// Relaxation time `T1` and dephasing time `T2`. Either may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams<T> {
    t1: T,
    t2: T,
}

impl<T: Real> NoiseParams<T> {
    pub fn new(t1: T, t2: T) -> Result<Self> {
        if !(t1 > T::zero()) || !(t2 > T::zero()) {
            return Err(Error::arg(format!("T1 = {t1} and T2 = {t2} must be positive")));
        }
        // T2 <= 2 T1, compared through rates so that infinite times work.
        let slack = T::validation_tol();
        if t2.recip() < t1.recip() * T::half() * (T::one() - slack) {
            return Err(Error::arg(format!("T2 = {t2} exceeds 2 T1 = {}", t1 * T::two())));
        }
        Ok(Self { t1, t2 })
    }

    /// No decoherence at all.
    pub fn noiseless() -> Self {
        Self {
            t1: T::infinity(),
            t2: T::infinity(),
        }
    }

    pub fn t1(&self) -> T {
        self.t1
    }

    pub fn t2(&self) -> T {
        self.t2
    }

    /// Pure-dephasing time, `1/Tp = 1/T2 - 1/(2 T1)`.
    pub fn tp(&self) -> T {
        self.pure_dephasing_rate().recip()
    }

    pub fn relaxation_rate(&self) -> T {
        self.t1.recip()
    }

    pub fn pure_dephasing_rate(&self) -> T {
        (self.t2.recip() - self.t1.recip() * T::half()).max(T::zero())
    }
}

impl Default for NoiseParams<f64> {
    fn default() -> Self {
        Self { t1: 250.0, t2: 170.0 }
    }
}

/// Scalars that fully determine the combined channel over one interval.
///
/// `s` is the amplitude survival `e^{-t/2T1}`, `p = 1 - s^2` the damping
/// probability and `gamma_p = e^{-t/Tp}` the pure-dephasing factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelScalars<T> {
    s: T,
    gamma_p: T,
}

impl<T: Real> ChannelScalars<T> {
    pub fn new(p: T, gamma_p: T) -> Result<Self> {
        let unit = |x: T| x >= T::zero() && x <= T::one();
        if !unit(p) || !unit(gamma_p) {
            return Err(Error::arg(format!("p = {p} and gamma_p = {gamma_p} must lie in [0, 1]")));
        }
        Ok(Self {
            s: (T::one() - p).sqrt(),
            gamma_p,
        })
    }

    pub fn from_params(params: &NoiseParams<T>, t: T) -> Result<Self> {
        if !(t >= T::zero()) {
            return Err(Error::arg(format!("duration {t} is negative")));
        }
        let decay = |rate: T| if rate == T::zero() { T::one() } else { (-rate * t).exp() };
        Ok(Self {
            s: decay(params.relaxation_rate() * T::half()),
            gamma_p: decay(params.pure_dephasing_rate()),
        })
    }

    pub fn s(&self) -> T {
        self.s
    }

    pub fn p(&self) -> T {
        T::one() - self.s * self.s
    }

    pub fn gamma_p(&self) -> T {
        self.gamma_p
    }

    pub fn a(&self) -> T {
        (T::one() + self.s) * T::half()
    }

    pub fn b(&self) -> T {
        (T::one() - self.s) * T::half()
    }

    pub fn alpha(&self) -> T {
        (T::one() + self.gamma_p) * T::half()
    }

    pub fn beta(&self) -> T {
        (T::one() - self.gamma_p) * T::half()
    }

    /// Off-diagonal factor `e^{-t/T2} = gamma_p s`.
    pub fn coherence(&self) -> T {
        self.gamma_p * self.s
    }

    /// `(gamma_1, gamma_p)` where `gamma_1` is the damping probability, the
    /// reading used when the Kraus operators are written down.
    pub fn damping_form(&self) -> (T, T) {
        (self.p(), self.gamma_p)
    }

    /// `(gamma_1, gamma_2)` where `gamma_1 = e^{-t/T1}` is the excited-state
    /// survival and `gamma_2 = e^{-t/T2}`, the reading used for the output
    /// matrix.
    pub fn survival_form(&self) -> (T, T) {
        (self.s * self.s, self.coherence())
    }

    /// Scalars of two consecutive intervals: survivals multiply.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            s: self.s * other.s,
            gamma_p: self.gamma_p * other.gamma_p,
        }
    }
}

/// A channel given by its Kraus operators.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel<T: Real> {
    operators: Vec<CMatrix<T>>,
    scalars: Option<ChannelScalars<T>>,
}

impl<T: Real> KrausChannel<T> {
    /// Checks shapes and completeness `sum M^dagger M = I`.
    pub fn new(operators: Vec<CMatrix<T>>) -> Result<Self> {
        let channel = Self {
            operators,
            scalars: None,
        };
        let dim = channel.dim()?;
        let err = channel.completeness_error();
        if err > T::validation_tol() * T::lit(10.0) {
            return Err(Error::arg(format!("Kraus operators of dimension {dim} violate completeness by {err}")));
        }
        Ok(channel)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            operators: vec![CMatrix::identity(dim)],
            scalars: None,
        }
    }

    fn dim(&self) -> Result<usize> {
        let first = self
            .operators
            .first()
            .ok_or_else(|| Error::arg("channel has no Kraus operators"))?;
        let d = first.nrows();
        for m in &self.operators {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: m.nrows(),
                });
            }
        }
        Ok(d)
    }

    pub fn operators(&self) -> &[CMatrix<T>] {
        &self.operators
    }

    /// The scalars the channel was built from, when it is a combined channel.
    pub fn scalars(&self) -> Option<&ChannelScalars<T>> {
        self.scalars.as_ref()
    }

    pub fn completeness_error(&self) -> T {
        let d = self.operators[0].nrows();
        let sum = self
            .operators
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, m| &acc + &(&m.adjoint() * m));
        sum.max_abs_diff(&CMatrix::identity(d))
    }

    /// `sum_k M_k rho M_k^dagger` for a matrix of the channel's own dimension.
    pub fn apply_matrix(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        let d = rho.nrows();
        self.operators
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, m| &acc + &(&(m * rho) * &m.adjoint()))
    }

    /// Applies the channel to `qubits` of an `n`-qubit matrix.
    pub fn apply_on(&self, rho: &CMatrix<T>, qubits: &[usize], n: usize) -> CMatrix<T> {
        let d = rho.nrows();
        self.operators
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, m| &acc + &rho.conjugate_on(m, qubits, n))
    }

    /// `self` after `first`: Kraus operators `A_i B_j`.
    pub fn after(&self, first: &Self) -> Self {
        let operators = self
            .operators
            .iter()
            .flat_map(|a| first.operators.iter().map(move |b| a * b))
            .collect();
        Self {
            operators,
            scalars: None,
        }
    }

    /// `U E(U^dagger rho U) U^dagger`, the channel seen in a rotated frame.
    pub fn conjugated_by(&self, u: &CMatrix<T>) -> Self {
        let ud = u.adjoint();
        Self {
            operators: self.operators.iter().map(|m| &(u * m) * &ud).collect(),
            scalars: None,
        }
    }
}

/// Combined amplitude damping and dephasing over a duration `t`.
pub fn combined_channel<T: Real>(params: &NoiseParams<T>, t: T) -> Result<KrausChannel<T>> {
    Ok(channel_from_scalars(ChannelScalars::from_params(params, t)?))
}

/// The four combined Kraus operators `M_ij = K^DP_i K^AD_j`.
pub fn channel_from_scalars<T: Real>(sc: ChannelScalars<T>) -> KrausChannel<T> {
    let sa = sc.alpha().sqrt();
    let sb = sc.beta().sqrt();
    let sp = sc.p().sqrt();
    let i2 = pauli::i2::<T>();
    let z = pauli::z::<T>();
    let k_ad1 = &i2.scale_real(sc.a()) + &z.scale_real(sc.b());
    let k_ad2 = pauli::lowering::<T>().scale_real(sp);
    let swapped = &i2.scale_real(sc.b()) + &z.scale_real(sc.a());
    KrausChannel {
        operators: vec![
            k_ad1.scale_real(sa),
            k_ad2.scale_real(sa),
            swapped.scale_real(sb),
            k_ad2.scale_real(sb),
        ],
        scalars: Some(sc),
    }
}

/// Pure amplitude damping with damping probability `p`.
pub fn amplitude_damping<T: Real>(p: T) -> Result<KrausChannel<T>> {
    Ok(channel_from_scalars(ChannelScalars::new(p, T::one())?))
}

/// Phase damping that multiplies off-diagonals by `e^{-chi}`.
pub fn dephasing_channel_from_chi<T: Real>(chi: T) -> Result<KrausChannel<T>> {
    if !(chi >= T::zero()) {
        return Err(Error::arg(format!("chi = {chi} is negative")));
    }
    let g = (-chi).exp();
    let sa = ((T::one() + g) * T::half()).sqrt();
    let sb = ((T::one() - g) * T::half()).sqrt();
    Ok(KrausChannel {
        operators: vec![pauli::i2().scale_real(sa), pauli::z().scale_real(sb)],
        scalars: Some(ChannelScalars {
            s: T::one(),
            gamma_p: g,
        }),
    })
}

/// Applies a single-qubit channel to one qubit of a register.
pub fn apply_local<T: Real, S: QuantumState<T> + ?Sized>(
    channel: &KrausChannel<T>,
    state: &S,
    qubit: usize,
) -> Result<DensityMatrix<T>> {
    let n = state.num_qubits();
    if qubit >= n {
        return Err(Error::arg(format!("qubit {qubit} out of range for {n} qubits")));
    }
    if channel.dim()? != 2 {
        return Err(Error::Dimension {
            expected: 2,
            found: channel.dim()?,
        });
    }
    let rho = state.to_density_matrix();
    DensityMatrix::from_matrix_unchecked(channel.apply_on(rho.matrix(), &[qubit], n))
}

/// Lindblad jump operator `L` with rate `Gamma` acting on `targets`.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpOperator<T: Real> {
    pub matrix: CMatrix<T>,
    pub rate: T,
    pub targets: Vec<usize>,
}

impl<T: Real> JumpOperator<T> {
    pub fn new(matrix: CMatrix<T>, rate: T, targets: Vec<usize>) -> Result<Self> {
        if !(rate >= T::zero()) {
            return Err(Error::arg(format!("rate {rate} is negative")));
        }
        if matrix.nrows() != 1 << targets.len() || !matrix.is_square() {
            return Err(Error::Dimension {
                expected: 1 << targets.len(),
                found: matrix.nrows(),
            });
        }
        Ok(Self { matrix, rate, targets })
    }

    /// `(X + iY)/2 = |0><1|`.
    pub fn relaxation(qubit: usize, rate: T) -> Result<Self> {
        Self::new(pauli::lowering(), rate, vec![qubit])
    }

    /// `Z`.
    pub fn dephasing(qubit: usize, rate: T) -> Result<Self> {
        Self::new(pauli::z(), rate, vec![qubit])
    }

    /// `Z (x) Z` crosstalk.
    pub fn zz(i: usize, j: usize, rate: T) -> Result<Self> {
        Self::new(pauli::z::<T>().kron(&pauli::z()), rate, vec![i, j])
    }
}

/// `-i[H, rho] + sum_k Gamma_k (L rho L^dagger - {L^dagger L, rho}/2)`.
pub fn lindblad_derivative<T: Real>(
    rho: &DensityMatrix<T>,
    hamiltonian: &CMatrix<T>,
    jumps: &[JumpOperator<T>],
) -> Result<CMatrix<T>> {
    let d = rho.dim();
    let n = rho.num_qubits();
    if hamiltonian.nrows() != d || hamiltonian.ncols() != d {
        return Err(Error::Dimension {
            expected: d,
            found: hamiltonian.nrows(),
        });
    }
    let r = rho.matrix();
    let commutator = &(hamiltonian * r) - &(r * hamiltonian);
    let mut out = commutator.scale(-Complex::i());
    for jump in jumps {
        if jump.targets.iter().any(|&q| q >= n) {
            return Err(Error::arg(format!("jump targets {:?} out of range for {n} qubits", jump.targets)));
        }
        let mut l_rho = r.clone();
        l_rho.left_apply(&jump.matrix, &jump.targets, n);
        let mut sandwich = l_rho.clone();
        sandwich.right_apply_adjoint(&jump.matrix, &jump.targets, n);
        let ldl = &jump.matrix.adjoint() * &jump.matrix;
        let mut left = r.clone();
        left.left_apply(&ldl, &jump.targets, n);
        let right = left.adjoint();
        let anti = &left + &right;
        let term = &sandwich - &anti.scale_real(T::half());
        out = &out + &term.scale_real(jump.rate);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumKind {
    /// `S(w) = w e^{-(w/wc)^2}`.
    Ohmic,
    /// `S(w) = w^{-1} e^{-(w/wc)^2}`.
    OneOverF,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity<T> {
    pub kind: SpectrumKind,
    pub omega_c: T,
}

impl<T: Real> SpectralDensity<T> {
    pub fn new(kind: SpectrumKind, omega_c: T) -> Result<Self> {
        if !(omega_c > T::zero()) || !omega_c.is_finite() {
            return Err(Error::arg(format!("cutoff {omega_c} must be positive")));
        }
        Ok(Self { kind, omega_c })
    }

    pub fn value(&self, omega: T) -> T {
        let cutoff = (-(omega / self.omega_c).powi(2)).exp();
        match self.kind {
            SpectrumKind::Ohmic => omega * cutoff,
            SpectrumKind::OneOverF => cutoff / omega,
        }
    }
}

fn check_pulse_times<T: Real>(times: &[T], t: T) -> Result<()> {
    if !(t > T::zero()) {
        return Err(Error::arg(format!("duration {t} must be positive")));
    }
    for (i, &tj) in times.iter().enumerate() {
        if !(tj > T::zero() && tj < t) {
            return Err(Error::arg(format!("pulse time {tj} outside (0, {t})")));
        }
        if i > 0 && !(tj > times[i - 1]) {
            return Err(Error::arg("pulse times are not strictly increasing"));
        }
    }
    Ok(())
}

/// Sum `sum_k c_k (e^{i w tau_k} - 1) / w` over the sequence phasors, with
/// `tau = (0, t_1, ..., t_n, t)` and `c = (1, -2, 2, ..., (-1)^{n+1})`.
///
/// Because the `c_k` sum to zero the `-1` terms drop out of the filter
/// function; keeping them and writing `e^{ix} - 1 = 2i sin(x/2) e^{ix/2}`
/// gives a form that stays accurate, and finite, as `w -> 0`.
fn scaled_phasor_sum<T: Real>(times: &[T], t: T, omega: T) -> C<T> {
    let n = times.len();
    let term = |tau: T| -> C<T> {
        let half = omega * tau * T::half();
        let amplitude = if omega == T::zero() {
            tau
        } else {
            T::two() * half.sin() / omega
        };
        Complex::new(T::zero(), amplitude) * Complex::from_polar(T::one(), half)
    };
    let mut sum = C::<T>::zero();
    let mut sign = -T::one();
    for &tj in times {
        sum = sum + term(tj) * cr(T::two() * sign);
        sign = -sign;
    }
    let last = if n % 2 == 0 { -T::one() } else { T::one() };
    sum + term(t) * cr(last)
}

/// `F(wt) = |1 + (-1)^{n+1} e^{iwt} + 2 sum_j (-1)^j e^{i w t_j}|^2`.
pub fn filter_function<T: Real>(pulse_times: &[T], t: T, omega: T) -> Result<T> {
    check_pulse_times(pulse_times, t)?;
    Ok(scaled_phasor_sum(pulse_times, t, omega).norm_sqr() * omega * omega)
}

/// Log-log slope of the filter function between two low frequencies.
pub fn low_frequency_slope<T: Real>(pulse_times: &[T], t: T, omega_lo: T, omega_hi: T) -> Result<T> {
    let lo = filter_function(pulse_times, t, omega_lo)?;
    let hi = filter_function(pulse_times, t, omega_hi)?;
    Ok((hi.ln() - lo.ln()) / (omega_hi.ln() - omega_lo.ln()))
}

/// `chi(t) = (2/pi) int_0^inf S(w)/w F(wt) dw`, truncated at `10 wc`.
pub fn chi_integral<T: Real>(spectrum: &SpectralDensity<T>, pulse_times: &[T], t: T) -> Result<T> {
    check_pulse_times(pulse_times, t)?;
    let wc = spectrum.omega_c;
    let integrand = |w: T| {
        let cutoff = (-(w / wc).powi(2)).exp();
        let g = scaled_phasor_sum(pulse_times, t, w).norm_sqr();
        match spectrum.kind {
            SpectrumKind::Ohmic => cutoff * g * w * w,
            SpectrumKind::OneOverF => cutoff * g,
        }
    };
    let q = integrate(integrand, T::zero(), wc * T::lit(10.0), Tolerance::default())?;
    Ok((q.value * T::two() / T::PI()).max(T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{reduced_density, BlochVector, PureState};
    use approx::assert_abs_diff_eq;

    fn device() -> NoiseParams<f64> {
        NoiseParams::default()
    }

    #[test]
    fn zero_duration_is_identity() {
        let ch = combined_channel(&device(), 0.0).unwrap();
        assert!(ch.operators()[0].max_abs_diff(&CMatrix::identity(2)) < 1e-15);
        for m in &ch.operators()[1..] {
            assert!(m.max_abs() < 1e-15);
        }
    }

    #[test]
    fn ground_state_is_fixed() {
        let ch = combined_channel(&device(), 37.0).unwrap();
        let g = PureState::<f64>::basis(1, 0).unwrap().to_density();
        let out = ch.apply_matrix(g.matrix());
        assert!(out.max_abs_diff(g.matrix()) <= 1e-15);
    }

    #[test]
    fn output_matches_closed_form() {
        let params = device();
        let t = 100.0;
        let rho = BlochVector::new(1.0, 0.0, 0.0).unwrap().to_density();
        let out = combined_channel(&params, t).unwrap().apply_matrix(rho.matrix());
        assert_abs_diff_eq!(out[(0, 1)].re, 0.5 * (-t / 170.0f64).exp(), epsilon = 1e-14);
        let p = 1.0 - (-t / 250.0f64).exp();
        assert_abs_diff_eq!(out[(0, 0)].re, 0.5 + 0.5 * p, epsilon = 1e-14);
        assert_abs_diff_eq!(out[(1, 1)].re, 0.5 * (1.0 - p), epsilon = 1e-14);
    }

    #[test]
    fn both_printed_conventions_describe_one_channel() {
        let sc = ChannelScalars::from_params(&device(), 60.0).unwrap();
        let (g1, gp) = sc.damping_form();
        let a = (1.0 + (1.0 - g1).sqrt()) / 2.0;
        assert_abs_diff_eq!(a, sc.a(), epsilon = 1e-15);
        assert_eq!(gp, sc.gamma_p());
        let (surv, g2) = sc.survival_form();
        assert_abs_diff_eq!(surv, (-60.0f64 / 250.0).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(g2, (-60.0f64 / 170.0).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(g2 / surv.sqrt(), gp, epsilon = 1e-15);
        let rho = BlochVector::new(0.2, -0.3, 0.1).unwrap().to_density();
        let m = rho.matrix();
        let out = channel_from_scalars(sc).apply_matrix(m);
        assert_abs_diff_eq!(out[(0, 0)].re, m[(0, 0)].re + (1.0 - surv) * m[(1, 1)].re, epsilon = 1e-15);
        assert_abs_diff_eq!(out[(1, 1)].re, surv * m[(1, 1)].re, epsilon = 1e-15);
        assert!((out[(0, 1)] - m[(0, 1)] * g2).norm() < 1e-15);
    }

    #[test]
    fn scalars_respect_ranges() {
        let sc = ChannelScalars::from_params(&device(), 500.0).unwrap();
        assert_abs_diff_eq!(sc.a() + sc.b(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sc.alpha() + sc.beta(), 1.0, epsilon = 1e-15);
        assert!(ChannelScalars::<f64>::new(1.2, 0.5).is_err());
        assert!(ChannelScalars::from_params(&device(), -1.0).is_err());
    }

    #[test]
    fn noise_params_validation() {
        assert!(NoiseParams::new(100.0, 200.0).is_ok());
        assert!(NoiseParams::new(100.0, 201.0).is_err());
        assert!(NoiseParams::new(0.0, 10.0).is_err());
        assert!(NoiseParams::new(f64::INFINITY, 10.0).is_ok());
        assert_abs_diff_eq!(device().tp(), 1.0 / (1.0 / 170.0 - 1.0 / 500.0), epsilon = 1e-9);
        let quiet = combined_channel(&NoiseParams::<f64>::noiseless(), 1e6).unwrap();
        assert!(quiet.operators()[0].max_abs_diff(&CMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn full_damping_relaxes_to_ground() {
        let ch = amplitude_damping(1.0).unwrap();
        let s = PureState::<f64>::from_bitstring("11").unwrap();
        let out = apply_local(&ch, &s, 0).unwrap();
        let target = PureState::<f64>::from_bitstring("01").unwrap().to_density();
        assert!(out.matrix().max_abs_diff(target.matrix()) < 1e-15);
        assert!(apply_local(&ch, &s, 2).is_err());
    }

    #[test]
    fn local_channel_leaves_partner_alone() {
        let bell = PureState::<f64>::ghz(2).unwrap();
        let ch = channel_from_scalars(ChannelScalars::new(0.3, 0.8).unwrap());
        let out = apply_local(&ch, &bell, 0).unwrap();
        let before = reduced_density(&bell, &[1]).unwrap();
        let after = reduced_density(&out, &[1]).unwrap();
        assert!(before.matrix().max_abs_diff(after.matrix()) < 1e-15);
        assert!(out.validate().is_ok());
    }

    #[test]
    fn lindblad_fixed_points() {
        let jumps = vec![
            JumpOperator::relaxation(0, 0.004).unwrap(),
            JumpOperator::dephasing(0, 0.002).unwrap(),
        ];
        let h = CMatrix::zeros(2, 2);
        let g = PureState::<f64>::basis(1, 0).unwrap().to_density();
        assert!(lindblad_derivative(&g, &h, &jumps).unwrap().max_abs() < 1e-18);
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert!(lindblad_derivative(&mixed, &h, &jumps[1..]).unwrap().max_abs() < 1e-18);
    }

    #[test]
    fn dephasing_generator_matches_analytic_decay() {
        let rate = 0.01;
        let rho = BlochVector::new(1.0, 0.0, 0.0).unwrap().to_density();
        let d = lindblad_derivative(&rho, &CMatrix::zeros(2, 2), &[JumpOperator::dephasing(0, rate).unwrap()]).unwrap();
        assert_abs_diff_eq!(d[(0, 1)].re, -2.0 * rate * 0.5, epsilon = 1e-15);
        let dt = 1e-4;
        let fd = 0.5 * ((-2.0f64 * rate * dt).exp() - 1.0) / dt;
        assert_abs_diff_eq!(d[(0, 1)].re, fd, epsilon = 2.0 * rate * rate * dt);
    }

    #[test]
    fn zz_generator_is_traceless_and_hermitian() {
        let psi = crate::state::haar_random_state::<f64>(3, 9).unwrap().to_density();
        let jumps = vec![
            JumpOperator::zz(0, 2, 0.3).unwrap(),
            JumpOperator::relaxation(1, 0.1).unwrap(),
        ];
        let h = pauli::x::<f64>().kron(&pauli::z()).kron(&pauli::i2());
        let d = lindblad_derivative(&psi, &h, &jumps).unwrap();
        assert!(d.trace().norm() < 1e-12);
        assert!(d.hermiticity_error() < 1e-12);
    }

    #[test]
    fn free_filter_function_closed_form() {
        for &(w, t) in &[(0.3, 2.0), (1.7, 0.4), (0.0, 1.0)] {
            let f = filter_function(&[], t, w).unwrap();
            assert_abs_diff_eq!(f, 4.0 * (w * t / 2.0f64).sin().powi(2), epsilon = 1e-13);
        }
        assert_eq!(filter_function(&[0.25, 0.75], 1.0, 0.0).unwrap(), 0.0);
        assert!(filter_function(&[0.75, 0.25], 1.0, 1.0).is_err());
        assert!(filter_function(&[1.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn filter_slopes() {
        let free = low_frequency_slope(&[], 1.0, 1e-3, 2e-3).unwrap();
        assert_abs_diff_eq!(free, 2.0, epsilon = 1e-4);
        let echo = low_frequency_slope(&[0.5], 1.0, 1e-2, 2e-2).unwrap();
        assert_abs_diff_eq!(echo, 4.0, epsilon = 1e-3);
        // The symmetric pair at 1/4, 3/4 also cancels the second moment.
        let xx = low_frequency_slope(&[0.25, 0.75], 1.0, 1e-2, 2e-2).unwrap();
        assert_abs_diff_eq!(xx, 6.0, epsilon = 1e-3);
    }

    #[test]
    fn chi_closed_forms_for_free_evolution() {
        let wc = 0.1;
        for &t in &[1.0, 30.0, 400.0] {
            let ohmic = chi_integral(&SpectralDensity::new(SpectrumKind::Ohmic, wc).unwrap(), &[], t).unwrap();
            let expect = 2.0 * wc / std::f64::consts::PI.sqrt() * (1.0 - (-(wc * t / 2.0f64).powi(2)).exp());
            assert_abs_diff_eq!(ohmic, expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn dephasing_from_chi() {
        let ch = dephasing_channel_from_chi(std::f64::consts::LN_2).unwrap();
        let rho = BlochVector::new(1.0, 0.0, 0.0).unwrap().to_density();
        let out = ch.apply_matrix(rho.matrix());
        assert_abs_diff_eq!(out[(0, 1)].re, 0.25, epsilon = 1e-15);
        assert!(dephasing_channel_from_chi(-1.0f64).is_err());
        let id = dephasing_channel_from_chi(0.0f64).unwrap();
        assert!(id.apply_matrix(rho.matrix()).max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn channels_compose_as_a_semigroup() {
        let p = device();
        let two = combined_channel(&p, 30.0).unwrap().after(&combined_channel(&p, 45.0).unwrap());
        let one = combined_channel(&p, 75.0).unwrap();
        let rho = BlochVector::new(0.1, 0.5, -0.6).unwrap().to_density();
        assert!(two.apply_matrix(rho.matrix()).max_abs_diff(&one.apply_matrix(rho.matrix())) < 1e-14);
        let sum = ChannelScalars::from_params(&p, 30.0).unwrap().compose(&ChannelScalars::from_params(&p, 45.0).unwrap());
        let direct = ChannelScalars::from_params(&p, 75.0).unwrap();
        assert_abs_diff_eq!(sum.s(), direct.s(), epsilon = 1e-15);
    }
}
