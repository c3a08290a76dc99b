//! Short-time fidelity decay rates and the two-qubit crosstalk ansatz.

use num_traits::Num;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{JumpOperator, NoiseParams};
use crate::scalar::Real;
use crate::state::{bloch_vector, DensityMatrix, SingleQubitUnitary};

/// Lindblad rates of the jump operators `|0><1|`, `Z` and `Z (x) Z`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRates<T> {
    pub gamma1: T,
    pub gamma2: T,
    #[serde(default)]
    pub gamma_zz: T,
}

impl<T: Real> DecayRates<T> {
    pub fn new(gamma1: T, gamma2: T, gamma_zz: T) -> Result<Self> {
        if !(gamma1 >= T::zero() && gamma2 >= T::zero() && gamma_zz >= T::zero()) {
            return Err(Error::arg("decay rates must be non-negative"));
        }
        Ok(Self { gamma1, gamma2, gamma_zz })
    }

    /// Rates generating the combined channel: `Gamma1 = 1/T1` and
    /// `Gamma2 = 1/(2 Tp)`, since `Z` dephasing at rate `Gamma` shrinks
    /// coherences by `e^{-2 Gamma t}` while the channel uses `e^{-t/Tp}`.
    pub fn from_noise(params: &NoiseParams<T>, gamma_zz: T) -> Result<Self> {
        Self::new(params.relaxation_rate(), params.pure_dephasing_rate() * T::half(), gamma_zz)
    }
}

/// `Var_rho[L] = Tr(rho L^dagger L) - |Tr(rho L)|^2`.
pub fn jump_variance<T: Real>(rho: &DensityMatrix<T>, jump: &JumpOperator<T>) -> Result<T> {
    let n = rho.num_qubits();
    if jump.targets.iter().any(|&q| q >= n) {
        return Err(Error::arg(format!("jump targets {:?} out of range", jump.targets)));
    }
    let mut l_rho = rho.matrix().clone();
    l_rho.left_apply(&jump.matrix, &jump.targets, n);
    let mean = l_rho.trace();
    let ldl = &jump.matrix.adjoint() * &jump.matrix;
    let mut ldl_rho = rho.matrix().clone();
    ldl_rho.left_apply(&ldl, &jump.targets, n);
    Ok(ldl_rho.trace().re - mean.norm_sqr())
}

/// `sum_k Gamma_k Var_{sigma_U}[L_k]` for relaxation and dephasing.
pub fn decay_rate<T: Real>(sigma: &DensityMatrix<T>, u: &SingleQubitUnitary<T>, rates: &DecayRates<T>) -> Result<T> {
    if sigma.num_qubits() != 1 {
        return Err(Error::arg("decay rate needs a single-qubit state"));
    }
    let rotated = sigma.conjugate(u.matrix(), &[0])?;
    let relax = jump_variance(&rotated, &JumpOperator::relaxation(0, rates.gamma1)?)?;
    let dephase = jump_variance(&rotated, &JumpOperator::dephasing(0, rates.gamma2)?)?;
    Ok(rates.gamma1 * relax + rates.gamma2 * dephase)
}

/// `Gamma1 [(1 - r_z)/2 - (r^2 - r_z^2)/4] + Gamma2 (1 - r_z^2)`.
pub fn decay_rate_quadratic<T: Real>(r: T, rz: T, rates: &DecayRates<T>) -> T {
    let quarter = T::lit(0.25);
    rates.gamma1 * ((T::one() - rz) * T::half() - (r * r - rz * rz) * quarter) + rates.gamma2 * (T::one() - rz * rz)
}

/// Decay rate after a rotation, via the rotated Bloch vector.
pub fn decay_rate_closed_form<T: Real>(sigma: &DensityMatrix<T>, u: &SingleQubitUnitary<T>, rates: &DecayRates<T>) -> Result<T> {
    let b = bloch_vector(&sigma.conjugate(u.matrix(), &[0])?)?;
    Ok(decay_rate_quadratic(b.r(), b.rz, rates))
}

/// Coefficients of `(II + c1 ZI + c2 IZ + c3 ZZ)/4`.
///
/// Generic over the number type so feasibility can be decided exactly with
/// rationals as well as in floating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzCoefficients<Q> {
    pub c1: Q,
    pub c2: Q,
    pub c3: Q,
}

impl<Q: Clone + Num + PartialOrd> AnsatzCoefficients<Q> {
    pub fn new(c1: Q, c2: Q, c3: Q) -> Self {
        Self { c1, c2, c3 }
    }

    /// `4 p_k`: the four eigenvalues of the ansatz state times four, in the
    /// order `1+c1+c2+c3`, `1+c1-c2-c3`, `1-c1+c2-c3`, `1-c1-c2+c3`.
    pub fn constraints(&self) -> [Q; 4] {
        let one = Q::one();
        let (c1, c2, c3) = (self.c1.clone(), self.c2.clone(), self.c3.clone());
        [
            one.clone() + c1.clone() + c2.clone() + c3.clone(),
            one.clone() + c1.clone() - c2.clone() - c3.clone(),
            one.clone() - c1.clone() + c2.clone() - c3.clone(),
            one - c1 - c2 + c3,
        ]
    }

    pub fn is_strictly_feasible(&self) -> bool {
        self.constraints().iter().all(|v| *v > Q::zero())
    }
}

impl<T: Real> AnsatzCoefficients<T> {
    /// Feasible up to `slack`: limit points of the strict polytope included.
    pub fn is_feasible_within(&self, slack: T) -> bool {
        self.constraints().iter().all(|v| *v >= -slack)
    }

    fn from_weights(p: &[T; 4]) -> Self {
        Self {
            c1: p[0] + p[1] - p[2] - p[3],
            c2: p[0] - p[1] + p[2] - p[3],
            c3: p[0] - p[1] - p[2] + p[3],
        }
    }

    fn weights(&self) -> [T; 4] {
        self.constraints().map(|v| v * T::lit(0.25))
    }
}

/// Why a pinned `c3` leaves no strictly feasible `(c1, c2)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfeasibilityCertificate {
    /// Indices (into [`AnsatzCoefficients::constraints`]) of two constraints
    /// whose sum does not depend on `c1, c2` and is not positive.
    pub constraints: (usize, usize),
    pub reason: String,
}

/// Decides exactly whether some `(c1, c2)` makes the ansatz strictly positive
/// for the given `c3`. Constraints 1+2 sum to `2(1 - c3)` (which also forces
/// `c1 > c2` and `c2 > c1` at `c3 = 1`) and constraints 0+3 sum to
/// `2(1 + c3)`; both positive is also sufficient, witnessed by `c1 = c2 = 0`.
pub fn pinned_c3_certificate<Q: Clone + Num + PartialOrd>(c3: Q) -> Option<InfeasibilityCertificate> {
    let one = Q::one();
    if !(one.clone() - c3.clone() > Q::zero()) {
        return Some(InfeasibilityCertificate {
            constraints: (1, 2),
            reason: "(1+c1-c2-c3) + (1-c1+c2-c3) = 2(1-c3) <= 0: needs c1 > c2 and c2 > c1".into(),
        });
    }
    if !(one + c3 > Q::zero()) {
        return Some(InfeasibilityCertificate {
            constraints: (0, 3),
            reason: "(1+c1+c2+c3) + (1-c1-c2+c3) = 2(1+c3) <= 0".into(),
        });
    }
    None
}

/// Decay rate of the ansatz state in the form
/// `sum_l Gamma1 [(1 - c_l)/2 - (r_l^2 - c_l^2)/4] + Gamma2 (1 - c_l^2) + Gamma_zz (1 - c3^2)`.
pub fn two_qubit_decay_rate<T: Real>(c: &AnsatzCoefficients<T>, r_i: T, r_j: T, rates: &DecayRates<T>) -> Result<T> {
    if !c.is_feasible_within(T::lit(1e-9)) {
        return Err(Error::Infeasible(format!("coefficients {c:?} violate positivity")));
    }
    Ok(two_qubit_objective(c, r_i, r_j, rates))
}

fn two_qubit_objective<T: Real>(c: &AnsatzCoefficients<T>, r_i: T, r_j: T, rates: &DecayRates<T>) -> T {
    decay_rate_quadratic(r_i, c.c1, rates) + decay_rate_quadratic(r_j, c.c2, rates) + rates.gamma_zz * (T::one() - c.c3 * c.c3)
}

/// Euclidean projection onto the probability simplex.
fn project_simplex<T: Real>(v: &[T; 4]) -> [T; 4] {
    let mut u = *v;
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumulative = T::zero();
    let mut theta = T::zero();
    for (k, uk) in u.iter().enumerate() {
        cumulative = cumulative + *uk;
        let candidate = (cumulative - T::one()) / T::from_usize(k + 1).unwrap();
        if *uk - candidate > T::zero() {
            theta = candidate;
        }
    }
    v.map(|x| (x - theta).max(T::zero()))
}

/// Minimises [`two_qubit_decay_rate`] over the closed positivity polytope by
/// projected gradient descent from 20 starts: the four vertices, six edge
/// midpoints, four face centres, the centre and five seeded random points.
///
/// The map `c -> p = (1 + Hc)/4` is a scaled isometry onto the probability
/// simplex, so projecting `p` is the Euclidean projection in `c`.
pub fn optimize_two_qubit_mdd<T: Real>(
    r_i: T,
    r_j: T,
    rates: &DecayRates<T>,
    seed: u64,
) -> Result<(AnsatzCoefficients<T>, T)> {
    let mut starts: Vec<[T; 4]> = Vec::with_capacity(20);
    let unit = |k: usize| {
        let mut p = [T::zero(); 4];
        p[k] = T::one();
        p
    };
    for k in 0..4 {
        starts.push(unit(k));
    }
    for a in 0..4 {
        for b in (a + 1)..4 {
            let mut p = [T::zero(); 4];
            p[a] = T::half();
            p[b] = T::half();
            starts.push(p);
        }
    }
    let third = T::one() / T::lit(3.0);
    for skip in 0..4 {
        let mut p = [third; 4];
        p[skip] = T::zero();
        starts.push(p);
    }
    starts.push([T::lit(0.25); 4]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while starts.len() < 20 {
        let e: [T; 4] = std::array::from_fn(|_| -T::sample_unit(&mut rng).max(T::min_positive_value()).ln());
        let total: T = e.iter().copied().sum();
        starts.push(e.map(|x| x / total));
    }

    // Gradient of the objective with respect to c, and its Lipschitz bound.
    let curvature = |g1: T, g2: T| T::two() * (g1 * T::lit(0.25) - g2);
    let k12 = curvature(rates.gamma1, rates.gamma2);
    let k3 = -T::two() * rates.gamma_zz;
    let lipschitz = k12.abs().max(k3.abs()).max(T::lit(1e-12));
    let step = T::one() / lipschitz;
    let grad = |c: &AnsatzCoefficients<T>| -> [T; 3] {
        [
            -rates.gamma1 * T::half() + k12 * c.c1,
            -rates.gamma1 * T::half() + k12 * c.c2,
            k3 * c.c3,
        ]
    };

    let objective = |c: &AnsatzCoefficients<T>| two_qubit_objective(c, r_i, r_j, rates);
    let mut best: Option<(AnsatzCoefficients<T>, T)> = None;
    for start in &starts {
        let start_c = AnsatzCoefficients::from_weights(start);
        let mut c = start_c;
        for _ in 0..5000 {
            let g = grad(&c);
            let moved = AnsatzCoefficients {
                c1: c.c1 - step * g[0],
                c2: c.c2 - step * g[1],
                c3: c.c3 - step * g[2],
            };
            let next = AnsatzCoefficients::from_weights(&project_simplex(&moved.weights()));
            let shift = (next.c1 - c.c1).abs() + (next.c2 - c.c2).abs() + (next.c3 - c.c3).abs();
            c = next;
            if shift <= T::epsilon() * T::lit(16.0) {
                break;
            }
        }
        for candidate in [start_c, c] {
            let v = objective(&candidate);
            if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
                best = Some((candidate, v));
            }
        }
    }
    best.ok_or_else(|| Error::Numerical("no optimizer start".into()))
}

/// Minimum of the objective over a `points^3` grid on `[-1, 1]^3`, keeping
/// grid points that satisfy positivity within `1e-9`.
pub fn grid_minimum<T: Real>(r_i: T, r_j: T, rates: &DecayRates<T>, points: usize) -> Result<(AnsatzCoefficients<T>, T)> {
    if points < 2 {
        return Err(Error::arg("grid needs at least two points per axis"));
    }
    let axis: Vec<T> = (0..points)
        .map(|k| -T::one() + T::two() * T::from_usize(k).unwrap() / T::from_usize(points - 1).unwrap())
        .collect();
    let slack = T::lit(1e-9);
    let mut best: Option<(AnsatzCoefficients<T>, T)> = None;
    for &c1 in &axis {
        for &c2 in &axis {
            for &c3 in &axis {
                let c = AnsatzCoefficients { c1, c2, c3 };
                if !c.is_feasible_within(slack) {
                    continue;
                }
                let v = two_qubit_objective(&c, r_i, r_j, rates);
                if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
                    best = Some((c, v));
                }
            }
        }
    }
    best.ok_or_else(|| Error::Infeasible("no feasible grid point".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::{mdd_unitary, PauliExpectations};
    use crate::linalg::{cr, CMatrix};
    use crate::state::{haar_random_unitary, BlochVector};
    use approx::assert_abs_diff_eq;
    use num_rational::Ratio;

    fn rates() -> DecayRates<f64> {
        DecayRates::from_noise(&NoiseParams::default(), 0.002).unwrap()
    }

    #[test]
    fn variance_form_equals_quadratic() {
        let sigma = BlochVector::new(0.3, -0.4, 0.2).unwrap().to_density();
        let u = SingleQubitUnitary::from_angles(0.9, 2.0);
        let a = decay_rate(&sigma, &u, &rates()).unwrap();
        let b = decay_rate_closed_form(&sigma, &u, &rates()).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-15);
    }

    #[test]
    fn reference_rates() {
        let r = rates();
        let ground = BlochVector::new(0.0, 0.0, 1.0).unwrap().to_density();
        assert_abs_diff_eq!(decay_rate(&ground, &SingleQubitUnitary::identity(), &r).unwrap(), 0.0, epsilon = 1e-18);
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        let u = SingleQubitUnitary::from_angles(1.3, 0.2);
        assert_abs_diff_eq!(decay_rate(&mixed, &u, &r).unwrap(), r.gamma1 / 2.0 + r.gamma2, epsilon = 1e-15);
    }

    #[test]
    fn mdd_minimises_the_rate() {
        let sigma = BlochVector::new(-0.2, 0.5, 0.1).unwrap().to_density();
        let ud = mdd_unitary(&PauliExpectations::exact(&bloch_vector(&sigma).unwrap()));
        let best = decay_rate(&sigma, &ud, &rates()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let u = haar_random_unitary::<f64, _>(&mut rng);
            assert!(best <= decay_rate(&sigma, &u, &rates()).unwrap() + 1e-12);
        }
    }

    #[test]
    fn pure_pair_reaches_zero_rate() {
        let (c, v) = optimize_two_qubit_mdd(1.0, 1.0, &rates(), 0).unwrap();
        assert_eq!((c.c1, c.c2, c.c3), (1.0, 1.0, 1.0));
        assert_eq!(v, 0.0);
        assert_eq!(two_qubit_decay_rate(&c, 1.0, 1.0, &rates()).unwrap(), 0.0);
    }

    #[test]
    fn decoupled_limit_is_a_sum() {
        let r = DecayRates::from_noise(&NoiseParams::default(), 0.0).unwrap();
        let c = AnsatzCoefficients::new(0.3, -0.2, 0.1);
        let total = two_qubit_decay_rate(&c, 0.6, 0.5, &r).unwrap();
        assert_abs_diff_eq!(total, decay_rate_quadratic(0.6, 0.3, &r) + decay_rate_quadratic(0.5, -0.2, &r), epsilon = 1e-15);
        assert!(two_qubit_decay_rate(&AnsatzCoefficients::new(1.0, -1.0, 1.0), 0.5, 0.5, &r).is_err());
    }

    #[test]
    fn variance_oracle_on_ansatz_state() {
        let r = rates();
        let c = AnsatzCoefficients::new(0.2, -0.3, 0.15);
        let p = c.weights();
        let rho = DensityMatrix::new(CMatrix::from_diagonal(&p.map(cr))).unwrap();
        let jumps = [
            JumpOperator::relaxation(0, r.gamma1).unwrap(),
            JumpOperator::dephasing(0, r.gamma2).unwrap(),
            JumpOperator::relaxation(1, r.gamma1).unwrap(),
            JumpOperator::dephasing(1, r.gamma2).unwrap(),
            JumpOperator::zz(0, 1, r.gamma_zz).unwrap(),
        ];
        let via_variance: f64 = jumps.iter().map(|j| j.rate * jump_variance(&rho, j).unwrap()).sum();
        let printed = two_qubit_decay_rate(&c, c.c1.abs(), c.c2.abs(), &r).unwrap();
        assert_abs_diff_eq!(via_variance, printed, epsilon = 1e-15);
    }

    #[test]
    fn exact_certificate_for_pinned_c3() {
        let one = Ratio::new(1i64, 1);
        let cert = pinned_c3_certificate(one).unwrap();
        assert_eq!(cert.constraints, (1, 2));
        assert!(pinned_c3_certificate(Ratio::new(99i64, 100)).is_none());
        assert!(pinned_c3_certificate(-one).is_some());
        let witness = AnsatzCoefficients::new(Ratio::new(0i64, 1), Ratio::new(0, 1), Ratio::new(99, 100));
        assert!(witness.is_strictly_feasible());
        let edge = AnsatzCoefficients::new(Ratio::new(1i64, 3), Ratio::new(1, 3), one);
        assert!(!edge.is_strictly_feasible());
    }

    #[test]
    fn projection_lands_on_simplex() {
        let p = project_simplex(&[0.9, 0.6, -0.3, 0.1]);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert!(p.iter().all(|x| *x >= 0.0));
        let q = project_simplex(&[0.1, 0.2, 0.3, 0.4]);
        for (a, b) in q.iter().zip([0.1, 0.2, 0.3, 0.4]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn optimizer_beats_a_coarse_grid() {
        let r = rates();
        let (c, v) = optimize_two_qubit_mdd(0.4, 0.7, &r, 5).unwrap();
        assert!(c.is_feasible_within(1e-9));
        let (_, g) = grid_minimum(0.4, 0.7, &r, 41).unwrap();
        assert!(v <= g + 1e-9);
    }
}
