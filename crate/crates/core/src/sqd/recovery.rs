//! Self-consistent configuration recovery.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fcidump::FciData;
use super::hamiltonian::{orbital_occupancies, project_and_diagonalize, Determinant};
use crate::error::{Error, Result};

/// Occupation bits of the `2 norb` spin orbitals, alpha first.
pub type Bitstring = Vec<bool>;

/// Piecewise-linear weight: `(delta/h) y` up to the filling factor `h`, then
/// linear from `delta` at `h` to 1 at `y = 1`.
pub fn weight_w(y: f64, h: f64, delta: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::arg(format!("filling factor {h} outside (0, 1)")));
    }
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::arg(format!("weight argument {y} outside [0, 1]")));
    }
    Ok(if y <= h {
        delta / h * y
    } else {
        delta + (1.0 - delta) * (y - h) / (1.0 - h)
    })
}

/// Average spin-orbital occupancy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OccupancyVector(pub Vec<f64>);

impl OccupancyVector {
    pub fn new(n: Vec<f64>) -> Result<Self> {
        if n.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::arg("occupancies must lie in [0, 1]"));
        }
        Ok(Self(n))
    }

    /// Unweighted mean of several occupancy vectors.
    pub fn mean(vectors: &[Vec<f64>]) -> Result<Self> {
        let first = vectors.first().ok_or_else(|| Error::arg("no occupancies to average"))?;
        let k = vectors.len() as f64;
        let n = (0..first.len())
            .map(|p| (vectors.iter().map(|v| v[p]).sum::<f64>() / k).clamp(0.0, 1.0))
            .collect();
        Ok(Self(n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Whether `x` holds exactly the target number of electrons in each spin
/// sector.
pub fn is_valid(x: &[bool], targets: (usize, usize)) -> bool {
    let norb = x.len() / 2;
    count(&x[..norb]) == targets.0 && count(&x[norb..]) == targets.1
}

fn count(bits: &[bool]) -> usize {
    bits.iter().filter(|b| **b).count()
}

/// Restores the electron count of each spin sector of `x`.
///
/// Surplus electrons are removed from occupied orbitals and missing ones added
/// to empty orbitals, one at a time, each candidate drawn with probability
/// proportional to `w(|x_i - n_i|)` among the remaining candidates. The
/// filling factor of a sector is `N_sigma / norb`.
pub fn recover_configuration<R: Rng + ?Sized>(
    x: &[bool],
    n: &OccupancyVector,
    targets: (usize, usize),
    delta: f64,
    rng: &mut R,
) -> Result<Bitstring> {
    if x.len() != n.len() || x.len() % 2 != 0 {
        return Err(Error::Dimension {
            expected: n.len(),
            found: x.len(),
        });
    }
    let norb = x.len() / 2;
    if targets.0 > norb || targets.1 > norb {
        return Err(Error::arg(format!("cannot place {targets:?} electrons in {norb} orbitals per spin")));
    }
    let mut out = x.to_vec();
    for (range, target) in [(0..norb, targets.0), (norb..2 * norb, targets.1)] {
        let bits = &mut out[range.clone()];
        let occ = &n.0[range];
        let have = count(bits);
        if have == target {
            continue;
        }
        let add = have < target;
        let h = target as f64 / norb as f64;
        let mut candidates: Vec<usize> = (0..norb).filter(|&i| bits[i] != add).collect();
        let mut weights: Vec<f64> = candidates
            .iter()
            .map(|&i| {
                let y = (bits[i] as u8 as f64 - occ[i]).abs();
                if h > 0.0 && h < 1.0 {
                    weight_w(y, h, delta)
                } else {
                    Ok(1.0)
                }
            })
            .collect::<Result<_>>()?;
        for _ in 0..have.abs_diff(target) {
            // All-zero weights leave no preference among the candidates.
            let pick = match WeightedIndex::new(&weights) {
                Ok(dist) => dist.sample(rng),
                Err(_) => rng.random_range(0..candidates.len()),
            };
            bits[candidates[pick]] = add;
            candidates.swap_remove(pick);
            weights.swap_remove(pick);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryConfig {
    /// Recovery iterations after the initial post-selected one.
    pub iterations: usize,
    pub batches: usize,
    pub samples_per_batch: usize,
    pub delta: f64,
    pub seed: u64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            iterations: 5,
            batches: 10,
            samples_per_batch: 300,
            delta: 0.01,
            seed: 0,
        }
    }
}

impl RecoveryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batches == 0 || self.samples_per_batch == 0 {
            return Err(Error::arg("batch count and batch size must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::arg(format!("delta {} outside (0, 1)", self.delta)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationReport {
    pub iteration: usize,
    pub batch_energies: Vec<f64>,
    pub mean_energy: f64,
    /// `|mean_energy - reference|` when a reference is known.
    pub error: Option<f64>,
    /// Distinct configurations in the pool the batches were drawn from.
    pub pool_size: usize,
    /// Previously invalid samples corrected in this iteration.
    pub recovered: usize,
    pub occupancy: OccupancyVector,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub reference: Option<f64>,
    pub iterations: Vec<IterationReport>,
}

fn stream_rng(seed: u64, iteration: usize, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((iteration as u64) << 32 | lane);
    rng
}

/// Draws up to `size` distinct configurations, weighted by multiplicity,
/// without replacement.
fn draw_batch<R: Rng + ?Sized>(pool: &[(Determinant, u64)], size: usize, rng: &mut R) -> Vec<Determinant> {
    if pool.len() <= size {
        return pool.iter().map(|(d, _)| *d).collect();
    }
    let mut weights: Vec<f64> = pool.iter().map(|(_, c)| *c as f64).collect();
    let mut out = Vec::with_capacity(size);
    for _ in 0..size {
        let dist = WeightedIndex::new(&weights).expect("positive weights remain");
        let k = dist.sample(rng);
        out.push(pool[k].0);
        weights[k] = 0.0;
    }
    out
}

/// Runs the post-selected iteration followed by `config.iterations` rounds of
/// correction with the running occupancy estimate.
///
/// Each round corrects every originally invalid sample, merges the results
/// with the originally valid ones, draws `config.batches` batches from the
/// pool, diagonalizes each and replaces the occupancy by the unweighted mean
/// of the batch ground-state occupancies. Batches run in parallel on
/// independent random streams, so results do not depend on the worker count.
pub fn self_consistent_recovery(
    samples: &[Bitstring],
    fci: &FciData,
    config: &RecoveryConfig,
    reference: Option<f64>,
) -> Result<RecoveryReport> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::arg("no samples"));
    }
    let m = fci.num_spin_orbitals();
    if let Some(bad) = samples.iter().find(|s| s.len() != m) {
        return Err(Error::Dimension {
            expected: m,
            found: bad.len(),
        });
    }
    let targets = fci.sector_electrons();
    let (valid, invalid): (Vec<&Bitstring>, Vec<&Bitstring>) = samples.iter().partition(|s| is_valid(s, targets));
    if valid.is_empty() {
        return Err(Error::NoValidConfigurations(format!(
            "none of {} samples has {targets:?} electrons per spin",
            samples.len()
        )));
    }
    let mut base: BTreeMap<Determinant, u64> = BTreeMap::new();
    for s in &valid {
        *base.entry(Determinant::from_bits(s)?).or_default() += 1;
    }

    let mut reports = Vec::with_capacity(config.iterations + 1);
    let mut occupancy: Option<OccupancyVector> = None;
    for iteration in 0..=config.iterations {
        let mut pool = base.clone();
        let mut recovered = 0;
        if let Some(n) = &occupancy {
            let mut rng = stream_rng(config.seed, iteration, u32::MAX as u64);
            for x in &invalid {
                let fixed = recover_configuration(x, n, targets, config.delta, &mut rng)?;
                *pool.entry(Determinant::from_bits(&fixed)?).or_default() += 1;
                recovered += 1;
            }
        }
        let pool: Vec<(Determinant, u64)> = pool.into_iter().collect();
        let results: Vec<(f64, Vec<f64>)> = (0..config.batches)
            .into_par_iter()
            .map(|k| {
                let mut rng = stream_rng(config.seed, iteration, k as u64);
                let mut dets = draw_batch(&pool, config.samples_per_batch, &mut rng);
                dets.sort_unstable();
                let (e0, v) = project_and_diagonalize(&dets, fci)?;
                Ok((e0, orbital_occupancies(&dets, &v, fci.norb)))
            })
            .collect::<Result<_>>()?;
        let batch_energies: Vec<f64> = results.iter().map(|r| r.0).collect();
        let mean_energy = batch_energies.iter().sum::<f64>() / batch_energies.len() as f64;
        let n = OccupancyVector::mean(&results.into_iter().map(|r| r.1).collect::<Vec<_>>())?;
        reports.push(IterationReport {
            iteration,
            batch_energies,
            mean_energy,
            error: reference.map(|r| (mean_energy - r).abs()),
            pool_size: pool.len(),
            recovered,
            occupancy: n.clone(),
        });
        occupancy = Some(n);
    }
    Ok(RecoveryReport {
        reference,
        iterations: reports,
    })
}

/// Samples determinants with probability `c_k^2`, then flips every bit
/// independently with probability `flip_rate`.
pub fn noisy_sampler(
    ground: &[f64],
    dets: &[Determinant],
    norb: usize,
    flip_rate: f64,
    shots: usize,
    seed: u64,
) -> Result<Vec<Bitstring>> {
    if ground.len() != dets.len() || dets.is_empty() {
        return Err(Error::Dimension {
            expected: dets.len(),
            found: ground.len(),
        });
    }
    if !(0.0..1.0).contains(&flip_rate) {
        return Err(Error::arg(format!("flip rate {flip_rate} outside [0, 1)")));
    }
    let dist = WeightedIndex::new(ground.iter().map(|c| c * c)).map_err(|e| Error::Numerical(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..shots)
        .map(|_| {
            let mut bits = dets[dist.sample(&mut rng)].to_bits(norb);
            for b in bits.iter_mut() {
                if rng.random::<f64>() < flip_rate {
                    *b = !*b;
                }
            }
            bits
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_anchor_points() {
        let h = 0.3;
        assert_eq!(weight_w(0.0, h, 0.01).unwrap(), 0.0);
        assert!((weight_w(h, h, 0.01).unwrap() - 0.01).abs() < 1e-15);
        assert!((weight_w(1.0, h, 0.01).unwrap() - 1.0).abs() < 1e-15);
        assert!(weight_w(0.5, 1.0, 0.01).is_err());
        assert!(weight_w(1.5, 0.5, 0.01).is_err());
    }

    #[test]
    fn valid_configurations_are_untouched() {
        let n = OccupancyVector::new(vec![0.5; 4]).unwrap();
        let x = vec![true, false, false, true];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(recover_configuration(&x, &n, (1, 1), 0.01, &mut rng).unwrap(), x);
    }

    #[test]
    fn one_missing_electron_adds_one_bit() {
        let n = OccupancyVector::new(vec![0.5; 6]).unwrap();
        let x = vec![true, false, false, true, false, false];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = recover_configuration(&x, &n, (2, 1), 0.01, &mut rng).unwrap();
        assert_eq!(y.iter().zip(&x).filter(|(a, b)| a != b).count(), 1);
        assert!(y[0] && y[3]);
        assert!(is_valid(&y, (2, 1)));
    }

    #[test]
    fn surplus_only_clears_bits() {
        let n = OccupancyVector::new(vec![0.2, 0.9, 0.1, 0.8, 0.5, 0.5, 0.5, 0.5]).unwrap();
        let x = vec![true, true, true, true, false, false, false, false];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let y = recover_configuration(&x, &n, (2, 2), 0.01, &mut rng).unwrap();
            assert!(is_valid(&y, (2, 2)));
            assert!(y[..4].iter().zip(&x[..4]).all(|(a, b)| !a || *b));
            assert!(y[4..].iter().zip(&x[4..]).all(|(a, b)| *a || !b));
        }
    }

    #[test]
    fn impossible_targets_are_rejected() {
        let n = OccupancyVector::new(vec![0.5; 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(recover_configuration(&[true; 4], &n, (3, 0), 0.01, &mut rng).is_err());
        assert!(recover_configuration(&[true; 2], &n, (1, 0), 0.01, &mut rng).is_err());
    }

    #[test]
    fn sampler_is_seeded_and_clean_without_flips() {
        let dets = vec![Determinant::new(0b01, 0b01), Determinant::new(0b10, 0b10)];
        let ground = vec![0.6, 0.8];
        let a = noisy_sampler(&ground, &dets, 2, 0.0, 200, 5).unwrap();
        assert!(a.iter().all(|s| is_valid(s, (1, 1))));
        assert_eq!(a, noisy_sampler(&ground, &dets, 2, 0.0, 200, 5).unwrap());
        assert!(noisy_sampler(&ground, &dets, 2, 1.0, 1, 0).is_err());
    }
}
