//! Dense complex matrices sized for few-qubit registers.
//!
//! Storage is column-major. Qubit 0 is the leftmost tensor factor, so in an
//! `n`-qubit register qubit `q` owns bit `1 << (n - 1 - q)` of a basis index.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type C<T> = Complex<T>;

#[inline]
pub fn c<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn cr<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// Bit mask of qubit `q` in an `n`-qubit basis index.
#[inline]
pub fn qubit_bit(q: usize, n: usize) -> usize {
    1 << (n - 1 - q)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from entries listed row by row.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[C<T>]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count");
        Self::from_fn(rows, cols, |i, j| entries[i * cols + j])
    }

    pub fn from_diagonal(diag: &[C<T>]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Outer product `|u><v|`.
    pub fn outer(u: &[C<T>], v: &[C<T>]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, k: C<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| *x * k).collect(),
        }
    }

    pub fn scale_real(&self, k: T) -> Self {
        self.scale(cr(k))
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).fold(C::zero(), |a, b| a + b)
    }

    pub fn diagonal(&self) -> Vec<C<T>> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (r2, c2) = (other.rows, other.cols);
        Self::from_fn(self.rows * r2, self.cols * c2, |i, j| {
            self[(i / r2, j / c2)] * other[(i % r2, j % c2)]
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|a| a.norm()).fold(T::zero(), T::max)
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn hermiticity_error(&self) -> T {
        let mut err = T::zero();
        for j in 0..self.cols {
            for i in 0..=j.min(self.rows - 1) {
                err = err.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        err
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.is_square() && self.hermiticity_error() <= tol
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.is_square() && (&self.adjoint() * self).max_abs_diff(&Self::identity(self.rows)) <= tol
    }

    /// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
    /// rotations. Eigenvalues are returned in ascending order; column `k` of
    /// the returned matrix is the eigenvector of eigenvalue `k`.
    pub fn hermitian_eigen(&self) -> Result<(Vec<T>, CMatrix<T>)> {
        if !self.is_square() {
            return Err(Error::Dimension {
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut v = Self::identity(n);
        let eps = T::epsilon();
        let scale = a.frobenius_norm().max(T::min_positive_value());
        let mut converged = n <= 1;
        for _sweep in 0..100 {
            let mut off = T::zero();
            for j in 0..n {
                for i in 0..j {
                    off = off + a[(i, j)].norm_sqr();
                }
            }
            if off.sqrt() <= eps * scale {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let g = apq.norm();
                    if g <= eps * eps * scale {
                        continue;
                    }
                    let app = a[(p, p)].re;
                    let aqq = a[(q, q)].re;
                    let phase = apq / cr(g);
                    let zeta = (aqq - app) / (T::two() * g);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let t = if zeta == T::zero() { T::one() } else { t };
                    let cs = T::one() / (T::one() + t * t).sqrt();
                    let sn = t * cs;
                    // J restricted to (p, q): [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
                    let jpp = cr(cs);
                    let jpq = cr(sn);
                    let jqp = -phase.conj() * cr(sn);
                    let jqq = phase.conj() * cr(cs);
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = akp * jpp + akq * jqp;
                        a[(k, q)] = akp * jpq + akq * jqq;
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = vkp * jpp + vkq * jqp;
                        v[(k, q)] = vkp * jpq + vkq * jqq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                        a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                    }
                    a[(p, q)] = C::zero();
                    a[(q, p)] = C::zero();
                }
            }
        }
        if !converged {
            return Err(Error::Numerical("Jacobi eigensolver did not converge".into()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| a[(x, x)].re.partial_cmp(&a[(y, y)].re).unwrap());
        let values = order.iter().map(|&k| a[(k, k)].re).collect();
        let vectors = Self::from_fn(n, n, |i, j| v[(i, order[j])]);
        Ok((values, vectors))
    }

    /// Applies a real function to the spectrum of a Hermitian matrix.
    pub fn hermitian_map(&self, f: impl Fn(T) -> T) -> Result<Self> {
        let (vals, vecs) = self.hermitian_eigen()?;
        let n = self.rows;
        Ok(Self::from_fn(n, n, |i, j| {
            (0..n).fold(C::zero(), |acc, k| acc + vecs[(i, k)] * cr(f(vals[k])) * vecs[(j, k)].conj())
        }))
    }

    /// Square root of a positive semidefinite matrix; negative eigenvalues
    /// from round-off are clamped to zero.
    pub fn psd_sqrt(&self) -> Result<Self> {
        self.hermitian_map(|x| x.max(T::zero()).sqrt())
    }

    /// `op * self * op^dagger` with `op` acting on `qubits` of an `n`-qubit
    /// register. The first listed qubit is the most significant factor of `op`.
    pub fn conjugate_on(&self, op: &CMatrix<T>, qubits: &[usize], n: usize) -> Self {
        let mut out = self.clone();
        out.left_apply(op, qubits, n);
        out.right_apply_adjoint(op, qubits, n);
        out
    }

    /// In place `self <- op * self` for `op` on a subset of qubits.
    pub fn left_apply(&mut self, op: &CMatrix<T>, qubits: &[usize], n: usize) {
        let groups = index_groups(qubits, n);
        let k = op.rows;
        let mut buf = vec![C::zero(); k];
        for col in 0..self.cols {
            for idx in &groups {
                for a in 0..k {
                    buf[a] = (0..k).fold(C::zero(), |acc, b| acc + op[(a, b)] * self[(idx[b], col)]);
                }
                for a in 0..k {
                    self[(idx[a], col)] = buf[a];
                }
            }
        }
    }

    /// In place `self <- self * op^dagger`.
    pub fn right_apply_adjoint(&mut self, op: &CMatrix<T>, qubits: &[usize], n: usize) {
        let groups = index_groups(qubits, n);
        let k = op.rows;
        let mut buf = vec![C::zero(); k];
        for row in 0..self.rows {
            for idx in &groups {
                for a in 0..k {
                    buf[a] = (0..k).fold(C::zero(), |acc, b| acc + self[(row, idx[b])] * op[(a, b)].conj());
                }
                for a in 0..k {
                    self[(row, idx[a])] = buf[a];
                }
            }
        }
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.cols, v.len());
        let mut out = vec![C::zero(); self.rows];
        for j in 0..self.cols {
            let vj = v[j];
            if vj.is_zero() {
                continue;
            }
            for i in 0..self.rows {
                out[i] = out[i] + self[(i, j)] * vj;
            }
        }
        out
    }
}

/// Applies `op` to `qubits` of a state vector.
pub fn apply_to_vector<T: Real>(amps: &mut [C<T>], op: &CMatrix<T>, qubits: &[usize], n: usize) {
    let groups = index_groups(qubits, n);
    let k = op.nrows();
    let mut buf = vec![C::zero(); k];
    for idx in &groups {
        for a in 0..k {
            buf[a] = (0..k).fold(C::zero(), |acc, b| acc + op[(a, b)] * amps[idx[b]]);
        }
        for a in 0..k {
            amps[idx[a]] = buf[a];
        }
    }
}

/// Lifts an operator on `qubits` to the full `n`-qubit space.
pub fn embed<T: Real>(op: &CMatrix<T>, qubits: &[usize], n: usize) -> CMatrix<T> {
    let mut full = CMatrix::identity(1 << n);
    full.left_apply(op, qubits, n);
    full
}

/// For every assignment of the non-target bits, the `2^k` basis indices
/// reached by varying the target bits (ordered as `op` expects).
fn index_groups(qubits: &[usize], n: usize) -> Vec<Vec<usize>> {
    let k = qubits.len();
    let masks: Vec<usize> = qubits.iter().map(|&q| qubit_bit(q, n)).collect();
    let target_mask: usize = masks.iter().sum();
    let offsets: Vec<usize> = (0..1usize << k)
        .map(|m| {
            (0..k)
                .filter(|&t| m & (1 << (k - 1 - t)) != 0)
                .map(|t| masks[t])
                .sum()
        })
        .collect();
    (0..1usize << n)
        .filter(|base| base & target_mask == 0)
        .map(|base| offsets.iter().map(|o| base | o).collect())
        .collect()
}

impl<T: Real> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i + j * self.rows]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i + j * self.rows]
    }
}

impl<'a, T: Real> Mul<&'a CMatrix<T>> for &'a CMatrix<T> {
    type Output = CMatrix<T>;

    fn mul(self, rhs: &'a CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product shape");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            for k in 0..self.cols {
                let b = rhs[(k, j)];
                if b.is_zero() {
                    continue;
                }
                for i in 0..self.rows {
                    out.data[i + j * self.rows] = out.data[i + j * self.rows] + self[(i, k)] * b;
                }
            }
        }
        out
    }
}

impl<'a, T: Real> Add<&'a CMatrix<T>> for &'a CMatrix<T> {
    type Output = CMatrix<T>;

    fn add(self, rhs: &'a CMatrix<T>) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<'a, T: Real> Sub<&'a CMatrix<T>> for &'a CMatrix<T> {
    type Output = CMatrix<T>;

    fn sub(self, rhs: &'a CMatrix<T>) -> CMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

/// Single-qubit Pauli and related constant matrices.
pub mod pauli {
    use super::*;

    pub fn i2<T: Real>() -> CMatrix<T> {
        CMatrix::identity(2)
    }

    pub fn x<T: Real>() -> CMatrix<T> {
        let (o, l) = (C::zero(), C::one());
        CMatrix::from_row_slice(2, 2, &[o, l, l, o])
    }

    pub fn y<T: Real>() -> CMatrix<T> {
        let o = C::zero();
        CMatrix::from_row_slice(2, 2, &[o, -C::i(), C::i(), o])
    }

    pub fn z<T: Real>() -> CMatrix<T> {
        let (o, l) = (C::zero(), C::one());
        CMatrix::from_row_slice(2, 2, &[l, o, o, -l])
    }

    /// Lowering operator `(X + iY)/2 = |0><1|`.
    pub fn lowering<T: Real>() -> CMatrix<T> {
        let (o, l) = (C::zero(), C::one());
        CMatrix::from_row_slice(2, 2, &[o, l, o, o])
    }

    pub fn hadamard<T: Real>() -> CMatrix<T> {
        let h = cr(T::FRAC_1_SQRT_2());
        CMatrix::from_row_slice(2, 2, &[h, h, h, -h])
    }

    /// `R_y(theta) = exp(-i theta Y / 2)`.
    pub fn ry<T: Real>(theta: T) -> CMatrix<T> {
        let (s, co) = (theta * T::half()).sin_cos();
        CMatrix::from_row_slice(2, 2, &[cr(co), cr(-s), cr(s), cr(co)])
    }

    /// `R_z(phi) = exp(-i phi Z / 2)`.
    pub fn rz<T: Real>(phi: T) -> CMatrix<T> {
        let h = phi * T::half();
        CMatrix::from_diagonal(&[C::from_polar(T::one(), -h), C::from_polar(T::one(), h)])
    }

    /// Phase gate `diag(1, e^{i lambda})`.
    pub fn phase<T: Real>(lambda: T) -> CMatrix<T> {
        CMatrix::from_diagonal(&[C::one(), C::from_polar(T::one(), lambda)])
    }

    /// Controlled phase on two qubits, `diag(1, 1, 1, e^{i lambda})`.
    pub fn controlled_phase<T: Real>(lambda: T) -> CMatrix<T> {
        CMatrix::from_diagonal(&[C::one(), C::one(), C::one(), C::from_polar(T::one(), lambda)])
    }
}
