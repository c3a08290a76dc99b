//! Closed-form single-qubit fidelity functionals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::noise::{ChannelScalars, KrausChannel};
use crate::scalar::Real;
use crate::state::{DensityMatrix, SingleQubitUnitary};

/// `sum_jk |Tr(M_jk U sigma U^dagger)|^2`, the entanglement fidelity of any
/// purification of `sigma` under the locally rotated channel.
pub fn local_entanglement_fidelity<T: Real>(
    sigma: &DensityMatrix<T>,
    channel: &KrausChannel<T>,
    u: &SingleQubitUnitary<T>,
) -> Result<T> {
    if sigma.num_qubits() != 1 {
        return Err(Error::arg("local fidelity needs a single-qubit state"));
    }
    let rotated = &(u.matrix() * sigma.matrix()) * &u.matrix().adjoint();
    Ok(kraus_overlap(&rotated, channel))
}

pub(crate) fn kraus_overlap<T: Real>(sigma: &CMatrix<T>, channel: &KrausChannel<T>) -> T {
    channel
        .operators()
        .iter()
        .map(|m| (m * sigma).trace().norm_sqr())
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FidelityCase {
    /// Convex: `f'' > 0`.
    C1,
    /// Concave: `f'' < 0`, stationary point at or beyond `r_z = 1`.
    C2,
    /// Linear: `f'' = 0` with slope `2ab >= 0`.
    C3,
}

/// `f(r_z) = alpha (a + b r_z)^2 + beta (b + a r_z)^2 + (p/4)(r^2 - r_z^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticFidelity<T> {
    pub scalars: ChannelScalars<T>,
    pub r: T,
}

impl<T: Real> QuadraticFidelity<T> {
    pub fn new(scalars: ChannelScalars<T>, r: T) -> Result<Self> {
        if !(r >= T::zero() && r <= T::one() + T::validation_tol()) {
            return Err(Error::arg(format!("Bloch length {r} outside [0, 1]")));
        }
        Ok(Self { scalars, r })
    }

    pub fn value(&self, rz: T) -> T {
        quadratic_f(rz, self.r, &self.scalars)
    }

    pub fn derivative(&self, rz: T) -> T {
        let sc = &self.scalars;
        let (a, b) = (sc.a(), sc.b());
        T::two() * sc.alpha() * b * (a + b * rz) + T::two() * sc.beta() * a * (b + a * rz) - sc.p() * T::half() * rz
    }

    /// `f'' = s (s - gamma_p)`.
    pub fn second_derivative(&self) -> T {
        let s = self.scalars.s();
        s * (s - self.scalars.gamma_p())
    }

    /// Stationary point `-2ab / f''`, absent in the linear case.
    pub fn extreme_point(&self) -> Option<T> {
        let curvature = self.second_derivative();
        if curvature.is_zero() {
            None
        } else {
            Some(-T::two() * self.scalars.a() * self.scalars.b() / curvature)
        }
    }

    /// Maximiser over `[-r, r]`; always `r`.
    pub fn argmax(&self) -> T {
        self.r
    }
}

pub fn quadratic_f<T: Real>(rz: T, r: T, sc: &ChannelScalars<T>) -> T {
    let (a, b) = (sc.a(), sc.b());
    sc.alpha() * (a + b * rz).powi(2) + sc.beta() * (b + a * rz).powi(2) + sc.p() * T::lit(0.25) * (r * r - rz * rz)
}

pub fn classify_case<T: Real>(sc: &ChannelScalars<T>) -> FidelityCase {
    let curvature = sc.s() * (sc.s() - sc.gamma_p());
    if curvature > T::zero() {
        FidelityCase::C1
    } else if curvature < T::zero() {
        FidelityCase::C2
    } else {
        FidelityCase::C3
    }
}

/// Second-order fidelity loss `f(r) - f(r cos delta)` from a rotation error
/// `delta` of the diagonalising unitary.
pub fn gate_error_delta<T: Real>(r: T, delta: T, sc: &ChannelScalars<T>) -> T {
    let g1 = sc.p();
    let inner = (T::one() - T::two() * r) * g1 + T::two() * r * (T::one() - sc.gamma_p() * sc.s());
    r * delta * delta * T::lit(0.25) * inner
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FidelityBounds<T> {
    pub upper: T,
    pub lower: T,
}

/// Bounds on the fidelity between a multi-qubit state and its image under
/// MDD, from the diagonalised reduced state `sigma_d` alone.
///
/// `upper = Tr(sigma_d E(sigma_d)) + 2 sqrt(det sigma_d det E(sigma_d))` is the
/// single-qubit fidelity `F(sigma_d, E(sigma_d))`; `lower` is the entanglement
/// fidelity of a purification.
pub fn mixed_state_bounds<T: Real>(sigma_d: &DensityMatrix<T>, channel: &KrausChannel<T>) -> Result<FidelityBounds<T>> {
    if sigma_d.num_qubits() != 1 {
        return Err(Error::arg("bounds need a single-qubit state"));
    }
    let m = sigma_d.matrix();
    if m[(0, 1)].norm() > T::validation_tol() * T::lit(100.0) {
        return Err(Error::arg(format!("state is not diagonal (off-diagonal {})", m[(0, 1)].norm())));
    }
    let image = channel.apply_matrix(m);
    let det = |x: &CMatrix<T>| (x[(0, 0)] * x[(1, 1)] - x[(0, 1)] * x[(1, 0)]).re.max(T::zero());
    let overlap = (m * &image).trace().re;
    Ok(FidelityBounds {
        upper: overlap + T::two() * (det(m) * det(&image)).sqrt(),
        lower: kraus_overlap(m, channel),
    })
}
