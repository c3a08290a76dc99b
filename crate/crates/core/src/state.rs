//! Qubit register states, reduced states and fidelity functionals.
//!
//! Qubit 0 is the leftmost tensor factor: in `|q0 q1 ... q(n-1)>` the basis
//! index is the binary number `q0 q1 ... q(n-1)`. `|01>` therefore has index 1
//! and its qubit 0 is in `|0>`.

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{apply_to_vector, c, cr, pauli, qubit_bit, CMatrix, C};
use crate::scalar::Real;

pub const MAX_PURE_QUBITS: usize = 12;
pub const MAX_MIXED_QUBITS: usize = 10;

/// Normalized state vector of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState<T: Real> {
    amplitudes: Vec<C<T>>,
    num_qubits: usize,
}

impl<T: Real> PureState<T> {
    pub fn new(amplitudes: Vec<C<T>>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::arg(format!("amplitude count {len} is not 2^n with n >= 1")));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_PURE_QUBITS {
            return Err(Error::arg(format!("{num_qubits} qubits exceeds the limit of {MAX_PURE_QUBITS}")));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
        if (norm - T::one()).abs() > T::validation_tol() {
            return Err(Error::arg(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes, num_qubits })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(mut amplitudes: Vec<C<T>>) -> Result<Self> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
        if norm <= T::zero() || !norm.is_finite() {
            return Err(Error::arg("cannot normalize a zero vector"));
        }
        for a in &mut amplitudes {
            *a = *a / cr(norm);
        }
        Self::new(amplitudes)
    }

    /// Computational basis state `|index>`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_PURE_QUBITS || index >= 1 << num_qubits {
            return Err(Error::arg(format!("basis state {index} of {num_qubits} qubits")));
        }
        let mut amps = vec![C::zero(); 1 << num_qubits];
        amps[index] = C::one();
        Ok(Self { amplitudes: amps, num_qubits })
    }

    /// Basis state from a bit string such as `"0101"`, qubit 0 first.
    pub fn from_bitstring(bits: &str) -> Result<Self> {
        let index = usize::from_str_radix(bits, 2)
            .map_err(|_| Error::arg(format!("not a bit string: {bits:?}")))?;
        Self::basis(bits.len(), index)
    }

    /// `(|0...0> + |1...1>)/sqrt(2)`.
    pub fn ghz(num_qubits: usize) -> Result<Self> {
        let mut amps = vec![C::zero(); 1 << num_qubits.min(MAX_PURE_QUBITS + 1)];
        let h = cr(T::FRAC_1_SQRT_2());
        amps[0] = h;
        let last = amps.len() - 1;
        amps[last] = h;
        Self::new(amps)
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amplitudes
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn inner(&self, other: &Self) -> Result<C<T>> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .fold(C::zero(), |acc, (a, b)| acc + a.conj() * *b))
    }

    /// Applies a unitary acting on `qubits`.
    pub fn apply(&self, op: &CMatrix<T>, qubits: &[usize]) -> Result<Self> {
        check_targets(op, qubits, self.num_qubits)?;
        let mut amps = self.amplitudes.clone();
        apply_to_vector(&mut amps, op, qubits, self.num_qubits);
        Ok(Self {
            amplitudes: amps,
            num_qubits: self.num_qubits,
        })
    }

    pub fn to_density(&self) -> DensityMatrix<T> {
        DensityMatrix {
            matrix: CMatrix::outer(&self.amplitudes, &self.amplitudes),
            num_qubits: self.num_qubits,
        }
    }
}

/// Density matrix of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    matrix: CMatrix<T>,
    num_qubits: usize,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: CMatrix<T>) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix produced by a trace-preserving completely positive map
    /// of a valid state. Only the shape is checked.
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix<T>) -> Result<Self> {
        let dim = matrix.nrows();
        if !matrix.is_square() {
            return Err(Error::Dimension {
                expected: dim,
                found: matrix.ncols(),
            });
        }
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::arg(format!("dimension {dim} is not 2^n with n >= 1")));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        if num_qubits > MAX_MIXED_QUBITS {
            return Err(Error::arg(format!("{num_qubits} qubits exceeds the limit of {MAX_MIXED_QUBITS}")));
        }
        Ok(Self { matrix, num_qubits })
    }

    pub fn validate(&self) -> Result<()> {
        let tol = T::validation_tol();
        let herm = self.matrix.hermiticity_error();
        if herm > tol {
            return Err(Error::arg(format!("not Hermitian (deviation {herm})")));
        }
        let tr = self.matrix.trace();
        if (tr.re - T::one()).abs() > tol || tr.im.abs() > tol {
            return Err(Error::arg(format!("trace {tr} differs from 1")));
        }
        if !is_positive_semidefinite(&self.matrix, T::eigen_tol()) {
            return Err(Error::arg("eigenvalue below tolerance"));
        }
        Ok(())
    }

    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        let d = 1usize << num_qubits.min(MAX_MIXED_QUBITS + 1);
        Self::from_matrix_unchecked(CMatrix::identity(d).scale_real(T::one() / T::from_usize(d).unwrap()))
    }

    pub fn from_bloch(b: &BlochVector<T>) -> Self {
        let h = T::half();
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[
                cr(h * (T::one() + b.rz)),
                c(h * b.rx, -h * b.ry),
                c(h * b.rx, h * b.ry),
                cr(h * (T::one() - b.rz)),
            ],
        );
        Self { matrix: m, num_qubits: 1 }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.matrix
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Result<Vec<T>> {
        let (mut vals, _) = self.matrix.hermitian_eigen()?;
        vals.reverse();
        Ok(vals)
    }

    /// `op rho op^dagger` with `op` acting on `qubits`.
    pub fn conjugate(&self, op: &CMatrix<T>, qubits: &[usize]) -> Result<Self> {
        check_targets(op, qubits, self.num_qubits)?;
        Ok(Self {
            matrix: self.matrix.conjugate_on(op, qubits, self.num_qubits),
            num_qubits: self.num_qubits,
        })
    }

    /// Tensor product `self (x) other`, `self` on the leading qubits.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Self::from_matrix_unchecked(self.matrix.kron(&other.matrix))
    }

    /// Probabilities of computational basis outcomes.
    pub fn populations(&self) -> Vec<T> {
        self.matrix.diagonal().iter().map(|d| d.re.max(T::zero())).collect()
    }
}

/// Positivity test by Cholesky factorisation of `m + tol I`.
fn is_positive_semidefinite<T: Real>(m: &CMatrix<T>, tol: T) -> bool {
    let n = m.nrows();
    let mut l = CMatrix::<T>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re + tol;
        for k in 0..j {
            d = d - l[(j, k)].norm_sqr();
        }
        if !(d > T::zero()) {
            return false;
        }
        let djj = d.sqrt();
        l[(j, j)] = cr(djj);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / cr(djj);
        }
    }
    true
}

/// Anything that can be reduced to a density matrix on a subset of qubits.
pub trait QuantumState<T: Real> {
    fn num_qubits(&self) -> usize;
    fn to_density_matrix(&self) -> DensityMatrix<T>;
    fn partial_state(&self, qubits: &[usize]) -> Result<DensityMatrix<T>>;
}

impl<T: Real> QuantumState<T> for PureState<T> {
    fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn to_density_matrix(&self) -> DensityMatrix<T> {
        self.to_density()
    }

    fn partial_state(&self, qubits: &[usize]) -> Result<DensityMatrix<T>> {
        let (kept, env) = split_indices(qubits, self.num_qubits)?;
        let k = kept.len();
        let amps = &self.amplitudes;
        let m = CMatrix::from_fn(k, k, |a, b| {
            env.iter()
                .fold(C::zero(), |acc, e| acc + amps[kept[a] | e] * amps[kept[b] | e].conj())
        });
        DensityMatrix::from_matrix_unchecked(m)
    }
}

impl<T: Real> QuantumState<T> for DensityMatrix<T> {
    fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn to_density_matrix(&self) -> DensityMatrix<T> {
        self.clone()
    }

    fn partial_state(&self, qubits: &[usize]) -> Result<DensityMatrix<T>> {
        let (kept, env) = split_indices(qubits, self.num_qubits)?;
        let k = kept.len();
        let rho = &self.matrix;
        let m = CMatrix::from_fn(k, k, |a, b| {
            env.iter()
                .fold(C::zero(), |acc, e| acc + rho[(kept[a] | e, kept[b] | e)])
        });
        DensityMatrix::from_matrix_unchecked(m)
    }
}

/// Basis-index offsets of the kept qubits (in the listed order) and of the
/// traced-out environment.
fn split_indices(qubits: &[usize], n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if qubits.is_empty() {
        return Err(Error::arg("no qubits to keep"));
    }
    let mut seen = 0usize;
    for &q in qubits {
        if q >= n {
            return Err(Error::arg(format!("qubit {q} out of range for {n} qubits")));
        }
        if seen & (1 << q) != 0 {
            return Err(Error::arg(format!("qubit {q} listed twice")));
        }
        seen |= 1 << q;
    }
    let k = qubits.len();
    let kept = (0..1usize << k)
        .map(|a| {
            (0..k)
                .filter(|&t| a & (1 << (k - 1 - t)) != 0)
                .map(|t| qubit_bit(qubits[t], n))
                .sum()
        })
        .collect();
    let env_qubits: Vec<usize> = (0..n).filter(|q| seen & (1 << q) == 0).collect();
    let m = env_qubits.len();
    let env = (0..1usize << m)
        .map(|e| {
            (0..m)
                .filter(|&t| e & (1 << (m - 1 - t)) != 0)
                .map(|t| qubit_bit(env_qubits[t], n))
                .sum()
        })
        .collect();
    Ok((kept, env))
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension { expected, found });
    }
    Ok(())
}

fn check_targets<T: Real>(op: &CMatrix<T>, qubits: &[usize], n: usize) -> Result<()> {
    if op.nrows() != 1 << qubits.len() || !op.is_square() {
        return Err(Error::Dimension {
            expected: 1 << qubits.len(),
            found: op.nrows(),
        });
    }
    split_indices(qubits, n).map(|_| ())
}

/// Reduced state on `qubits` (kept in the listed order).
pub fn reduced_density<T: Real, S: QuantumState<T> + ?Sized>(state: &S, qubits: &[usize]) -> Result<DensityMatrix<T>> {
    state.partial_state(qubits)
}

/// Single-qubit Bloch vector `(<X>, <Y>, <Z>)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector<T: Real> {
    pub rx: T,
    pub ry: T,
    pub rz: T,
}

impl<T: Real> BlochVector<T> {
    pub fn new(rx: T, ry: T, rz: T) -> Result<Self> {
        let b = Self { rx, ry, rz };
        if b.r() > T::one() + T::validation_tol() {
            return Err(Error::arg(format!("Bloch vector length {} exceeds 1", b.r())));
        }
        Ok(b)
    }

    pub fn r(&self) -> T {
        (self.rx * self.rx + self.ry * self.ry + self.rz * self.rz).sqrt()
    }

    pub fn to_density(&self) -> DensityMatrix<T> {
        DensityMatrix::from_bloch(self)
    }
}

pub fn bloch_vector<T: Real>(rho: &DensityMatrix<T>) -> Result<BlochVector<T>> {
    if rho.num_qubits != 1 {
        return Err(Error::arg(format!("Bloch vector needs 1 qubit, got {}", rho.num_qubits)));
    }
    let m = &rho.matrix;
    let two = T::two();
    Ok(BlochVector {
        rx: two * m[(1, 0)].re,
        ry: two * m[(1, 0)].im,
        rz: m[(0, 0)].re - m[(1, 1)].re,
    })
}

/// A 2x2 unitary, optionally tagged with the MDD angles that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleQubitUnitary<T: Real> {
    matrix: CMatrix<T>,
    angles: Option<(T, T)>,
}

impl<T: Real> SingleQubitUnitary<T> {
    pub fn new(matrix: CMatrix<T>) -> Result<Self> {
        if matrix.nrows() != 2 || matrix.ncols() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                found: matrix.nrows(),
            });
        }
        if !matrix.is_unitary(T::validation_tol() * T::lit(10.0)) {
            return Err(Error::arg("matrix is not unitary"));
        }
        Ok(Self { matrix, angles: None })
    }

    pub fn identity() -> Self {
        Self {
            matrix: CMatrix::identity(2),
            angles: None,
        }
    }

    /// `R_y(-theta) R_z(-phi)`.
    pub fn from_angles(theta: T, phi: T) -> Self {
        Self {
            matrix: &pauli::ry(-theta) * &pauli::rz(-phi),
            angles: Some((theta, phi)),
        }
    }

    pub(crate) fn from_matrix_unchecked(matrix: CMatrix<T>) -> Self {
        Self { matrix, angles: None }
    }

    pub fn x() -> Self {
        Self::from_matrix_unchecked(pauli::x())
    }

    pub fn y() -> Self {
        Self::from_matrix_unchecked(pauli::y())
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn angles(&self) -> Option<(T, T)> {
        self.angles
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            angles: None,
        }
    }

    /// `self * other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self::from_matrix_unchecked(&self.matrix * &other.matrix)
    }

    /// Distance to `other` modulo a global phase.
    pub fn phase_distance(&self, other: &Self) -> T {
        let overlap = (&self.matrix.adjoint() * &other.matrix).trace();
        if overlap.norm() == T::zero() {
            return self.matrix.max_abs_diff(&other.matrix);
        }
        let phase = overlap / cr(overlap.norm());
        self.matrix.scale(phase).max_abs_diff(&other.matrix)
    }

    pub fn is_identity_up_to_phase(&self, tol: T) -> bool {
        self.phase_distance(&Self::identity()) <= tol
    }
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(X) Y sqrt(X)))^2`.
pub fn fidelity<T: Real>(x: &DensityMatrix<T>, y: &DensityMatrix<T>) -> Result<T> {
    check_dim(x.dim(), y.dim())?;
    let sx = x.matrix.psd_sqrt()?;
    let inner = &(&sx * &y.matrix) * &sx;
    let (vals, _) = inner.hermitian_eigen()?;
    let tr: T = vals.iter().map(|v| v.max(T::zero()).sqrt()).sum();
    Ok((tr * tr).min(T::one()).max(T::zero()))
}

/// `<psi| rho |psi>`.
pub fn entanglement_fidelity<T: Real>(psi: &PureState<T>, channel_output: &DensityMatrix<T>) -> Result<T> {
    check_dim(psi.dim(), channel_output.dim())?;
    let v = channel_output.matrix.mul_vec(&psi.amplitudes);
    let f = psi
        .amplitudes
        .iter()
        .zip(&v)
        .fold(C::<T>::zero(), |acc, (a, b)| acc + a.conj() * *b);
    Ok(f.re.min(T::one()).max(T::zero()))
}

/// Haar-random pure state drawn from a normalized complex Gaussian vector.
pub fn haar_random_state<T: Real>(num_qubits: usize, seed: u64) -> Result<PureState<T>> {
    haar_random_state_with(num_qubits, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn haar_random_state_with<T: Real, R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Result<PureState<T>> {
    if num_qubits == 0 || num_qubits > MAX_PURE_QUBITS {
        return Err(Error::arg(format!("qubit count {num_qubits} outside 1..={MAX_PURE_QUBITS}")));
    }
    let amps = (0..1usize << num_qubits)
        .map(|_| Complex::new(T::sample_normal(rng), T::sample_normal(rng)))
        .collect();
    PureState::normalized(amps)
}

/// Haar-random element of U(2).
pub fn haar_random_unitary<T: Real, R: Rng + ?Sized>(rng: &mut R) -> SingleQubitUnitary<T> {
    let col = haar_random_state_with::<T, R>(1, rng).expect("one qubit");
    let (a, b) = (col.amplitudes[0], col.amplitudes[1]);
    let phase = Complex::from_polar(T::one(), T::two() * T::PI() * T::sample_unit(rng));
    let m = CMatrix::from_row_slice(2, 2, &[a, -b.conj() * phase, b, a.conj() * phase]);
    SingleQubitUnitary::from_matrix_unchecked(m)
}
