//! Globally adaptive Gauss-Kronrod (7/15) integration on a finite interval.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error_estimate: T,
    pub intervals: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerance<T> {
    pub absolute: T,
    pub relative: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for Tolerance<T> {
    fn default() -> Self {
        Self {
            absolute: T::lit(1e-10),
            relative: T::lit(1e-12),
            max_intervals: 4000,
        }
    }
}

#[derive(Clone, Copy)]
struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn kronrod<T: Real>(f: &impl Fn(T) -> T, a: T, b: T) -> Segment<T> {
    let centre = (a + b) * T::half();
    let half = (b - a) * T::half();
    let fc = f(centre);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for i in 0..7 {
        let dx = half * T::lit(XGK[i]);
        let pair = f(centre - dx) + f(centre + dx);
        k = k + pair * T::lit(WGK[i]);
        if i % 2 == 1 {
            g = g + pair * T::lit(WG[i / 2]);
        }
    }
    Segment {
        a,
        b,
        value: k * half,
        error: ((k - g) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]`, bisecting the segment with the largest error
/// estimate until the summed estimate meets `max(absolute, relative |I|)`.
pub fn integrate<T: Real>(f: impl Fn(T) -> T, a: T, b: T, tol: Tolerance<T>) -> Result<Quadrature<T>> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::arg(format!("bad integration interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(Quadrature {
            value: T::zero(),
            error_estimate: T::zero(),
            intervals: 0,
        });
    }
    let mut segments = vec![kronrod(&f, a, b)];
    loop {
        let value: T = segments.iter().map(|s| s.value).sum();
        let error: T = segments.iter().map(|s| s.error).sum();
        if !value.is_finite() {
            return Err(Error::Numerical(format!("integrand not finite on [{a}, {b}]")));
        }
        let target = tol.absolute.max(tol.relative * value.abs());
        if error <= target {
            return Ok(Quadrature {
                value,
                error_estimate: error,
                intervals: segments.len(),
            });
        }
        if segments.len() >= tol.max_intervals {
            return Err(Error::Numerical(format!(
                "quadrature stalled after {} intervals: estimate {value}, error {error}, target {target}",
                segments.len()
            )));
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let s = segments.swap_remove(worst);
        let mid = (s.a + s.b) * T::half();
        if !(mid > s.a && mid < s.b) {
            return Err(Error::Numerical(format!("interval [{}, {}] cannot be split further", s.a, s.b)));
        }
        segments.push(kronrod(&f, s.a, mid));
        segments.push(kronrod(&f, mid, s.b));
    }
}
