//! Determinant-basis Hamiltonian via the Slater–Condon rules.
//!
//! Spin orbitals are numbered alpha `0..norb` then beta `norb..2 norb`; a
//! determinant is the ordered product of creation operators in ascending
//! spin-orbital order acting on the vacuum.

use nalgebra::{DMatrix, SymmetricEigen};
use std::collections::HashSet;

use super::fcidump::FciData;
use crate::error::{Error, Result};

/// Largest subspace handed to the dense eigensolver.
pub const MAX_SUBSPACE: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Determinant {
    pub alpha: u64,
    pub beta: u64,
}

impl Determinant {
    pub fn new(alpha: u64, beta: u64) -> Self {
        Self { alpha, beta }
    }

    pub fn electrons(&self) -> (usize, usize) {
        (self.alpha.count_ones() as usize, self.beta.count_ones() as usize)
    }

    /// Occupations of all `2 norb` spin orbitals.
    pub fn to_bits(&self, norb: usize) -> Vec<bool> {
        (0..norb)
            .map(|p| self.alpha >> p & 1 == 1)
            .chain((0..norb).map(|p| self.beta >> p & 1 == 1))
            .collect()
    }

    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        if bits.len() % 2 != 0 || bits.len() > 2 * super::fcidump::MAX_ORBITALS {
            return Err(Error::arg(format!("bitstring of length {}", bits.len())));
        }
        let norb = bits.len() / 2;
        let mask = |s: &[bool]| s.iter().enumerate().fold(0u64, |m, (p, b)| m | (*b as u64) << p);
        Ok(Self::new(mask(&bits[..norb]), mask(&bits[norb..])))
    }

    /// Occupied spin orbitals in ascending order.
    fn occupied(&self, norb: usize) -> Vec<usize> {
        ones(self.alpha).chain(ones(self.beta).map(|p| p + norb)).collect()
    }

    fn spin_mask(&self, norb: usize) -> u128 {
        self.alpha as u128 | (self.beta as u128) << norb
    }
}

fn ones(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (m != 0).then(|| {
            let p = m.trailing_zeros() as usize;
            m &= m - 1;
            p
        })
    })
}

/// Spin-orbital antisymmetrized integral `<pq||rs>`.
fn antisym(fci: &FciData, p: usize, q: usize, r: usize, s: usize) -> f64 {
    let n = fci.norb;
    let (sp, sq, sr, ss) = (p / n, q / n, r / n, s / n);
    let (p0, q0, r0, s0) = (p % n, q % n, r % n, s % n);
    let direct = if sp == sr && sq == ss { fci.eri(p0, r0, q0, s0) } else { 0.0 };
    let exchange = if sp == ss && sq == sr { fci.eri(p0, s0, q0, r0) } else { 0.0 };
    direct - exchange
}

fn one_body(fci: &FciData, p: usize, q: usize) -> f64 {
    let n = fci.norb;
    if p / n == q / n {
        fci.h(p % n, q % n)
    } else {
        0.0
    }
}

/// Sign picked up by moving the operator for orbital `p` past the occupied
/// orbitals below it.
fn parity_below(mask: u128, p: usize) -> f64 {
    if (mask & ((1u128 << p) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `<bra|H|ket>` including the core energy on the diagonal.
pub fn slater_condon(bra: &Determinant, ket: &Determinant, fci: &FciData) -> f64 {
    let n = fci.norb;
    let (b, k) = (bra.spin_mask(n), ket.spin_mask(n));
    if b.count_ones() != k.count_ones() {
        return 0.0;
    }
    let diff = b ^ k;
    match diff.count_ones() {
        0 => {
            let occ = ket.occupied(n);
            let mut e = fci.core_energy;
            for (x, &i) in occ.iter().enumerate() {
                e += one_body(fci, i, i);
                for &j in &occ[..x] {
                    e += antisym(fci, i, j, i, j);
                }
            }
            e
        }
        2 => {
            let i = (k & diff).trailing_zeros() as usize;
            let a = (b & diff).trailing_zeros() as usize;
            let sign = parity_below(k, i) * parity_below(k & !(1u128 << i), a);
            let mut v = one_body(fci, a, i);
            for j in ket.occupied(n) {
                if j != i {
                    v += antisym(fci, a, j, i, j);
                }
            }
            sign * v
        }
        4 => {
            let holes = k & diff;
            let parts = b & diff;
            let i = holes.trailing_zeros() as usize;
            let j = (holes & (holes - 1)).trailing_zeros() as usize;
            let a = parts.trailing_zeros() as usize;
            let bb = (parts & (parts - 1)).trailing_zeros() as usize;
            // a+_a a+_b a_j a_i |ket>
            let mut m = k;
            let mut sign = parity_below(m, i);
            m &= !(1u128 << i);
            sign *= parity_below(m, j);
            m &= !(1u128 << j);
            sign *= parity_below(m, bb);
            m |= 1u128 << bb;
            sign *= parity_below(m, a);
            sign * antisym(fci, a, bb, i, j)
        }
        _ => 0.0,
    }
}

/// All determinants with the electron counts of `fci`, in ascending order.
pub fn fci_space(fci: &FciData) -> Result<Vec<Determinant>> {
    let (na, nb) = fci.sector_electrons();
    let alphas = sector_strings(fci.norb, na);
    let betas = sector_strings(fci.norb, nb);
    if alphas.len().saturating_mul(betas.len()) > MAX_SUBSPACE * 64 {
        return Err(Error::arg("determinant space too large to enumerate"));
    }
    Ok(alphas
        .iter()
        .flat_map(|&a| betas.iter().map(move |&b| Determinant::new(a, b)))
        .collect())
}

/// Masks over `norb` bits with `count` bits set.
pub fn sector_strings(norb: usize, count: usize) -> Vec<u64> {
    if count > norb {
        return vec![];
    }
    let limit = u64::MAX >> (64 - norb);
    if count == 0 {
        return vec![0];
    }
    let mut out = Vec::new();
    let mut m: u64 = u64::MAX >> (64 - count);
    loop {
        out.push(m);
        // Next mask with the same popcount.
        let c = m & m.wrapping_neg();
        let r = m.wrapping_add(c);
        if r == 0 || r > limit {
            break;
        }
        m = (((r ^ m) >> 2) / c) | r;
        if m > limit {
            break;
        }
    }
    out
}

/// Dense Hamiltonian on `dets`.
pub fn hamiltonian_matrix(dets: &[Determinant], fci: &FciData) -> DMatrix<f64> {
    let d = dets.len();
    let mut h = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let v = slater_condon(&dets[i], &dets[j], fci);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// Lowest eigenpair of `P H P` on the span of `dets`.
pub fn project_and_diagonalize(dets: &[Determinant], fci: &FciData) -> Result<(f64, Vec<f64>)> {
    if dets.is_empty() {
        return Err(Error::NoValidConfigurations("empty subspace".into()));
    }
    if dets.len() > MAX_SUBSPACE {
        return Err(Error::arg(format!("subspace of {} exceeds {MAX_SUBSPACE}", dets.len())));
    }
    let mut seen = HashSet::with_capacity(dets.len());
    if !dets.iter().all(|d| seen.insert(*d)) {
        return Err(Error::arg("duplicate determinants in subspace"));
    }
    let eig = SymmetricEigen::new(hamiltonian_matrix(dets, fci));
    let (k, e0) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty spectrum");
    let v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((e0, v.into_iter().map(|x| x / norm).collect()))
}

/// Mean occupation of every spin orbital in the state `sum_k c_k |D_k>`.
pub fn orbital_occupancies(dets: &[Determinant], coefficients: &[f64], norb: usize) -> Vec<f64> {
    let mut n = vec![0.0; 2 * norb];
    for (d, c) in dets.iter().zip(coefficients) {
        let w = c * c;
        for p in d.occupied(norb) {
            n[p] += w;
        }
    }
    n
}
