//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use mdd_core::linalg::{c, cr};
use mdd_core::{BlochVector, PureState};
use num_complex::Complex64 as C;

pub type Dense = Vec<Vec<C>>;

pub fn fixture(name: &str) -> String {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn to_dense(m: &mdd_core::CMatrix) -> Dense {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn max_diff(a: &Dense, b: &Dense) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).norm()))
        .fold(0.0, f64::max)
}

/// Partial trace by explicit index bookkeeping: qubit 0 is the most
/// significant bit, `keep` lists the surviving qubits in output order.
pub fn naive_partial_trace(rho: &Dense, n: usize, keep: &[usize]) -> Dense {
    let env: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let bit = |idx: usize, q: usize| (idx >> (n - 1 - q)) & 1;
    let k = 1 << keep.len();
    let mut out = vec![vec![C::new(0.0, 0.0); k]; k];
    for i in 0..(1 << n) {
        for j in 0..(1 << n) {
            if env.iter().any(|&q| bit(i, q) != bit(j, q)) {
                continue;
            }
            let a = keep.iter().fold(0, |acc, &q| acc << 1 | bit(i, q));
            let b = keep.iter().fold(0, |acc, &q| acc << 1 | bit(j, q));
            out[a][b] += rho[i][j];
        }
    }
    out
}

/// Single-qubit master equation with `sqrt(g1)|0><1|` and `sqrt(gphi/2) Z`,
/// integrated with classical RK4.
pub fn rk4_relax_dephase(rho: [[C; 2]; 2], g1: f64, gphi: f64, t: f64, steps: usize) -> [[C; 2]; 2] {
    let deriv = |r: &[[C; 2]; 2]| -> [[C; 2]; 2] {
        let zero = C::new(0.0, 0.0);
        // sigma- rho sigma+ moves the |1><1| population to |0><0|.
        let mut d = [[zero; 2]; 2];
        d[0][0] += g1 * r[1][1];
        d[1][1] -= g1 * r[1][1];
        d[0][1] -= 0.5 * g1 * r[0][1];
        d[1][0] -= 0.5 * g1 * r[1][0];
        // (gphi/2)(Z rho Z - rho) kills coherences at rate gphi.
        d[0][1] -= gphi * r[0][1];
        d[1][0] -= gphi * r[1][0];
        d
    };
    let h = t / steps as f64;
    let add = |a: &[[C; 2]; 2], b: &[[C; 2]; 2], s: f64| -> [[C; 2]; 2] {
        let mut o = *a;
        for i in 0..2 {
            for j in 0..2 {
                o[i][j] += b[i][j] * s;
            }
        }
        o
    };
    let mut r = rho;
    for _ in 0..steps {
        let k1 = deriv(&r);
        let k2 = deriv(&add(&r, &k1, h / 2.0));
        let k3 = deriv(&add(&r, &k2, h / 2.0));
        let k4 = deriv(&add(&r, &k3, h));
        let mut acc = add(&r, &k1, h / 6.0);
        acc = add(&acc, &k2, h / 3.0);
        acc = add(&acc, &k3, h / 3.0);
        r = add(&acc, &k4, h / 6.0);
    }
    r
}

/// Applies `a_p` (or `a_p^dagger`) to the Fock state `state` with
/// Jordan–Wigner sign from the occupied modes below `p`.
fn ladder(state: u64, p: usize, create: bool) -> Option<(u64, f64)> {
    let occupied = state >> p & 1 == 1;
    if occupied == create {
        return None;
    }
    let mut below = 0;
    for q in 0..p {
        below += state >> q & 1;
    }
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    Some((state ^ (1 << p), sign))
}

/// Applies the operator string right to left: `ops[0] ... ops[k-1] |state>`.
fn apply_string(state: u64, ops: &[(usize, bool)]) -> Option<(u64, f64)> {
    let mut s = state;
    let mut sign = 1.0;
    for &(p, create) in ops.iter().rev() {
        let (next, sg) = ladder(s, p, create)?;
        s = next;
        sign *= sg;
    }
    Some((s, sign))
}

/// `<bra|H|ket>` for
/// `H = E_core + sum h_pq a+_p a_q + 1/2 sum <pq|rs> a+_p a+_q a_s a_r`,
/// summing every index tuple. Fock states are bit masks over spin orbitals
/// `0..2 norb`, alpha first.
pub fn fock_element(fci: &mdd_core::sqd::FciData, bra: u64, ket: u64) -> f64 {
    let n = fci.norb;
    let m = 2 * n;
    let spatial = |p: usize| (p % n, p / n);
    let mut total = if bra == ket { fci.core_energy } else { 0.0 };
    for p in 0..m {
        for q in 0..m {
            let ((ps, p_spin), (qs, q_spin)) = (spatial(p), spatial(q));
            if p_spin != q_spin {
                continue;
            }
            if let Some((s, sign)) = apply_string(ket, &[(p, true), (q, false)]) {
                if s == bra {
                    total += sign * fci.h(ps, qs);
                }
            }
        }
    }
    for p in 0..m {
        for q in 0..m {
            for r in 0..m {
                for s in 0..m {
                    let ((ps, p_spin), (qs, q_spin), (rs, r_spin), (ss, s_spin)) = (spatial(p), spatial(q), spatial(r), spatial(s));
                    if p_spin != r_spin || q_spin != s_spin {
                        continue;
                    }
                    if let Some((st, sign)) = apply_string(ket, &[(p, true), (q, true), (s, false), (r, false)]) {
                        if st == bra {
                            total += 0.5 * sign * fci.eri(ps, rs, qs, ss);
                        }
                    }
                }
            }
        }
    }
    total
}

/// `|sum_k c_k e^{i w tau_k}|^2` with the sign pattern of a pi-pulse
/// sequence, evaluated term by term.
pub fn naive_filter(times: &[f64], t: f64, w: f64) -> f64 {
    let n = times.len();
    let mut acc = C::new(1.0, 0.0);
    let last = if n % 2 == 0 { -1.0 } else { 1.0 };
    acc += last * C::new(0.0, w * t).exp();
    for (j, tj) in times.iter().enumerate() {
        let sign = if (j + 1) % 2 == 0 { 1.0 } else { -1.0 };
        acc += 2.0 * sign * C::new(0.0, w * tj).exp();
    }
    acc.norm_sqr()
}

pub fn random_bloch(rng: &mut rand_chacha::ChaCha8Rng) -> BlochVector {
    use rand::Rng;
    loop {
        let v: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
            return BlochVector::new(v[0], v[1], v[2]).unwrap();
        }
    }
}

/// Two-qubit purification of the qubit state with Bloch vector `b`; qubit 0
/// carries the state.
pub fn purification(b: &BlochVector) -> PureState {
    let r = b.r();
    let (l0, l1) = ((1.0 + r) / 2.0, (1.0 - r) / 2.0);
    let (theta, phi) = if r > 0.0 { ((b.rz / r).acos(), b.ry.atan2(b.rx)) } else { (0.0, 0.0) };
    let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let up = [cr(ct), c(phi.cos(), phi.sin()) * st];
    let down = [-c(phi.cos(), -phi.sin()) * st, cr(ct)];
    let mut amps = vec![cr(0.0); 4];
    for s in 0..2 {
        amps[2 * s] += up[s] * l0.sqrt();
        amps[2 * s + 1] += down[s] * l1.sqrt();
    }
    PureState::new(amps).unwrap()
}

/// Two-qubit decay rate of the correlation ansatz, term by term.
pub fn oracle_rate(c: [f64; 3], ri: f64, rj: f64, g1: f64, g2: f64, gzz: f64) -> f64 {
    let one = |r: f64, z: f64| g1 * ((1.0 - z) / 2.0 - (r * r - z * z) / 4.0) + g2 * (1.0 - z * z);
    one(ri, c[0]) + one(rj, c[1]) + gzz * (1.0 - c[2] * c[2])
}

/// Brute-force minimum over a `points`^3 grid of the positivity polytope.
pub fn oracle_grid(ri: f64, rj: f64, g: (f64, f64, f64), points: usize) -> f64 {
    let mut best = f64::INFINITY;
    let step = 2.0 / (points - 1) as f64;
    for a in 0..points {
        for b in 0..points {
            for k in 0..points {
                let c = [-1.0 + a as f64 * step, -1.0 + b as f64 * step, -1.0 + k as f64 * step];
                let p = [
                    1.0 + c[0] + c[1] + c[2],
                    1.0 + c[0] - c[1] - c[2],
                    1.0 - c[0] + c[1] - c[2],
                    1.0 - c[0] - c[1] + c[2],
                ];
                if p.iter().all(|x| *x >= -1e-9) {
                    best = best.min(oracle_rate(c, ri, rj, g.0, g.1, g.2));
                }
            }
        }
    }
    best
}
