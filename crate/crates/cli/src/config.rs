use std::path::{Path, PathBuf};

use mdd_core::dd::SequenceKind;
use mdd_core::noise::SpectrumKind;
use mdd_core::schedule::{QftDurations, DEFAULT_THRESHOLD};
use mdd_core::sqd::RecoveryConfig;
use mdd_core::NoiseParams;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

pub const DEFAULT_SHOTS: u64 = 10_000;
pub const DEFAULT_OMEGA_C: f64 = 0.1;

/// A parsed experiment: fields shared by every kind plus the kind-specific
/// settings.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub experiment: Experiment,
}

#[derive(Clone, Debug)]
pub enum Experiment {
    FidelitySweep(FidelitySweep),
    LemmaCheck(LemmaCheck),
    TheoremGap(TheoremGap),
    FilterNoise(FilterNoise),
    TwoQubitOpt(TwoQubitOpt),
    QftToy(QftToy),
    SqdRecover(SqdRecover),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub t1: f64,
    pub t2: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { t1: 250.0, t2: 170.0 }
    }
}

impl NoiseConfig {
    pub fn params(&self) -> Result<NoiseParams> {
        NoiseParams::new(self.t1, self.t2).map_err(|e| CliError::config(format!("noise: {e}")))
    }
}

/// Gaussian random dephasing on top of T1 relaxation.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingConfig {
    pub spectrum: SpectrumKind,
    #[serde(default = "default_omega_c")]
    pub omega_c: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FidelitySweep {
    pub noise: NoiseConfig,
    pub sequences: Vec<SequenceKind>,
    pub times: Vec<f64>,
    pub num_qubits: usize,
    pub states: usize,
    pub qubit: usize,
    /// Shots per Pauli observable for MDD; `null` uses exact expectations.
    pub shots: Option<u64>,
    pub dephasing: Option<DephasingConfig>,
}

impl Default for FidelitySweep {
    fn default() -> Self {
        Self {
            noise: NoiseConfig::default(),
            sequences: parse_kinds(&["none", "xx", "udd8", "mdd"]),
            times: default_times(),
            num_qubits: 4,
            states: 20,
            qubit: 0,
            shots: Some(DEFAULT_SHOTS),
            dephasing: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaCheck {
    pub noise: NoiseConfig,
    pub times: Vec<f64>,
    pub states: usize,
    pub trials: usize,
}

impl Default for LemmaCheck {
    fn default() -> Self {
        Self { noise: NoiseConfig::default(), times: vec![10.0, 100.0, 500.0], states: 20, trials: 10_000 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoremGap {
    pub noise: NoiseConfig,
    pub sequences: Vec<SequenceKind>,
    pub times: Vec<f64>,
    pub num_qubits: usize,
    pub states: usize,
    pub qubit: usize,
}

impl Default for TheoremGap {
    fn default() -> Self {
        Self {
            noise: NoiseConfig::default(),
            sequences: parse_kinds(&["xx", "xy4", "udd8", "qdd2"]),
            times: default_times(),
            num_qubits: 4,
            states: 20,
            qubit: 0,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterNoise {
    pub spectra: Vec<SpectrumKind>,
    pub omega_c: f64,
    pub sequences: Vec<SequenceKind>,
    pub times: Vec<f64>,
}

impl Default for FilterNoise {
    fn default() -> Self {
        Self {
            spectra: vec![SpectrumKind::Ohmic, SpectrumKind::OneOverF],
            omega_c: DEFAULT_OMEGA_C,
            sequences: parse_kinds(&["none", "xx", "xy4", "udd8", "qdd2"]),
            times: default_times(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoQubitOpt {
    pub noise: NoiseConfig,
    pub gamma_zz: f64,
    pub instances: usize,
    pub grid_points: usize,
}

impl Default for TwoQubitOpt {
    fn default() -> Self {
        Self { noise: NoiseConfig::default(), gamma_zz: 0.002, instances: 20, grid_points: 41 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QftToy {
    pub noise: NoiseConfig,
    pub sizes: Vec<usize>,
    pub sequences: Vec<SequenceKind>,
    pub repeats: usize,
    pub shots: Option<u64>,
    pub readout_shots: u64,
    pub threshold: f64,
    pub durations: QftDurations,
}

impl Default for QftToy {
    fn default() -> Self {
        Self {
            noise: NoiseConfig::default(),
            sizes: vec![2, 3, 4, 5, 6],
            sequences: parse_kinds(&["none", "xx", "mdd"]),
            repeats: 5,
            shots: Some(DEFAULT_SHOTS),
            readout_shots: 100_000,
            threshold: DEFAULT_THRESHOLD,
            durations: QftDurations::default(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqdRecover {
    /// Resolved against the config file's directory when relative.
    pub fcidump: PathBuf,
    #[serde(default = "default_flip_rate")]
    pub flip_rate: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub recovery: RecoveryConfig,
}

fn default_omega_c() -> f64 {
    DEFAULT_OMEGA_C
}

fn default_flip_rate() -> f64 {
    0.05
}

fn default_samples() -> usize {
    DEFAULT_SHOTS as usize
}

fn parse_kinds(names: &[&str]) -> Vec<SequenceKind> {
    names.iter().map(|n| n.parse().expect("built-in sequence name")).collect()
}

/// 16 points from 1 to 1000 µs, five per decade.
pub fn default_times() -> Vec<f64> {
    (0..16).map(|k| 10f64.powf(0.2 * k as f64)).collect()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut config = Self::parse(&text)?;
        if let Experiment::SqdRecover(sqd) = &mut config.experiment {
            if sqd.fcidump.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                sqd.fcidump = base.join(&sqd.fcidump);
            }
        }
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid JSON: {e}")))?;
        let Value::Object(mut map) = value else {
            return Err(CliError::config("the config must be a JSON object"));
        };
        let kind = match map.remove("kind") {
            Some(Value::String(k)) => k,
            Some(_) => return Err(CliError::config("`kind` must be a string")),
            None => return Err(CliError::config("missing `kind`")),
        };
        let seed = match map.remove("seed") {
            None => 0,
            Some(v) => v.as_u64().ok_or_else(|| CliError::config("`seed` must be a non-negative integer"))?,
        };
        let output = match map.remove("output") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(PathBuf::from(s)),
            Some(_) => return Err(CliError::config("`output` must be a string")),
        };
        let experiment = match kind.as_str() {
            "fidelity-sweep" => Experiment::FidelitySweep(section(&kind, map)?),
            "lemma-check" => Experiment::LemmaCheck(section(&kind, map)?),
            "theorem-gap" => Experiment::TheoremGap(section(&kind, map)?),
            "filter-noise" => Experiment::FilterNoise(section(&kind, map)?),
            "two-qubit-opt" => Experiment::TwoQubitOpt(section(&kind, map)?),
            "qft-toy" => Experiment::QftToy(section(&kind, map)?),
            "sqd-recover" => Experiment::SqdRecover(section(&kind, map)?),
            other => return Err(CliError::config(format!("unknown experiment kind {other:?}"))),
        };
        let config = Self { seed, output, experiment };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        match &self.experiment {
            Experiment::FidelitySweep(c) => {
                c.noise.params()?;
                check_times(&c.times)?;
                check_nonempty("sequences", &c.sequences)?;
                check_positive("states", c.states)?;
                check_qubit(c.qubit, c.num_qubits)?;
                check_shots(c.shots)?;
                if let Some(d) = &c.dephasing {
                    check_omega_c(d.omega_c)?;
                }
            }
            Experiment::LemmaCheck(c) => {
                c.noise.params()?;
                check_times(&c.times)?;
                check_positive("states", c.states)?;
                check_positive("trials", c.trials)?;
            }
            Experiment::TheoremGap(c) => {
                c.noise.params()?;
                check_times(&c.times)?;
                check_nonempty("sequences", &c.sequences)?;
                check_positive("states", c.states)?;
                check_qubit(c.qubit, c.num_qubits)?;
            }
            Experiment::FilterNoise(c) => {
                check_times(&c.times)?;
                check_nonempty("spectra", &c.spectra)?;
                check_nonempty("sequences", &c.sequences)?;
                check_omega_c(c.omega_c)?;
            }
            Experiment::TwoQubitOpt(c) => {
                c.noise.params()?;
                if !(c.gamma_zz >= 0.0 && c.gamma_zz.is_finite()) {
                    return Err(CliError::config("`gamma_zz` must be finite and non-negative"));
                }
                check_positive("instances", c.instances)?;
                if c.grid_points < 2 {
                    return Err(CliError::config("`grid_points` must be at least 2"));
                }
            }
            Experiment::QftToy(c) => {
                c.noise.params()?;
                check_nonempty("sizes", &c.sizes)?;
                check_nonempty("sequences", &c.sequences)?;
                check_positive("repeats", c.repeats)?;
                check_shots(c.shots)?;
                check_positive("readout_shots", c.readout_shots as usize)?;
                if !(c.threshold >= 0.0 && c.threshold.is_finite()) {
                    return Err(CliError::config("`threshold` must be finite and non-negative"));
                }
            }
            Experiment::SqdRecover(c) => {
                if !(0.0..=1.0).contains(&c.flip_rate) {
                    return Err(CliError::config("`flip_rate` must lie in [0, 1]"));
                }
                check_positive("samples", c.samples)?;
                c.recovery.validate().map_err(|e| CliError::config(format!("recovery: {e}")))?;
            }
        }
        Ok(())
    }
}

fn section<T: DeserializeOwned>(kind: &str, map: Map<String, Value>) -> Result<T> {
    serde_json::from_value(Value::Object(map)).map_err(|e| CliError::config(format!("{kind}: {e}")))
}

fn check_times(times: &[f64]) -> Result<()> {
    check_nonempty("times", times)?;
    if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(CliError::config("`times` must be positive and finite"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::config("`times` must be strictly increasing"));
    }
    Ok(())
}

fn check_nonempty<T>(name: &str, items: &[T]) -> Result<()> {
    if items.is_empty() {
        return Err(CliError::config(format!("`{name}` must not be empty")));
    }
    Ok(())
}

fn check_positive(name: &str, n: usize) -> Result<()> {
    if n == 0 {
        return Err(CliError::config(format!("`{name}` must be at least 1")));
    }
    Ok(())
}

fn check_qubit(qubit: usize, num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || qubit >= num_qubits {
        return Err(CliError::config(format!("qubit {qubit} outside a {num_qubits}-qubit register")));
    }
    Ok(())
}

fn check_shots(shots: Option<u64>) -> Result<()> {
    if shots == Some(0) {
        return Err(CliError::config("`shots` must be positive or null"));
    }
    Ok(())
}

fn check_omega_c(omega_c: f64) -> Result<()> {
    if !(omega_c.is_finite() && omega_c > 0.0) {
        return Err(CliError::config("`omega_c` must be positive"));
    }
    Ok(())
}
