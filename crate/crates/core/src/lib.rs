//! Simulation and verification toolkit for measurement-based dynamical
//! decoupling (MDD).
//!
//! The numeric modules are generic over [`Real`] (`f32` or `f64`); the type
//! aliases at the crate root fix them to `f64`, which is what the CLI and the
//! acceptance suite use. The configuration-recovery pipeline in [`sqd`] works
//! in `f64` only.

pub mod analysis;
pub mod dd;
pub mod error;
pub mod linalg;
pub mod noise;
pub mod quadrature;
pub mod scalar;
pub mod sqd;
pub mod schedule;
pub mod state;

pub use error::{Error, Result};
pub use scalar::Real;

pub type CMatrix = linalg::CMatrix<f64>;
pub type PureState = state::PureState<f64>;
pub type DensityMatrix = state::DensityMatrix<f64>;
pub type BlochVector = state::BlochVector<f64>;
pub type SingleQubitUnitary = state::SingleQubitUnitary<f64>;
pub type NoiseParams = noise::NoiseParams<f64>;
pub type KrausChannel = noise::KrausChannel<f64>;
pub type ChannelScalars = noise::ChannelScalars<f64>;
pub type SpectralDensity = noise::SpectralDensity<f64>;
pub type JumpOperator = noise::JumpOperator<f64>;
pub type PulseSchedule = dd::PulseSchedule<f64>;
pub type PauliExpectations = dd::PauliExpectations<f64>;
pub type DecayRates = analysis::DecayRates<f64>;
pub type AnsatzCoefficients = analysis::AnsatzCoefficients<f64>;
/// Ansatz coefficients in exact rational arithmetic.
pub type ExactAnsatz = analysis::AnsatzCoefficients<num_rational::Ratio<i64>>;
pub type QuadraticFidelity = analysis::QuadraticFidelity<f64>;
