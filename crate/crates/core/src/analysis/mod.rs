//! Closed forms, optimizers and verifiers for the optimality claims.

mod decay;
mod fidelity;
mod verify;

pub use decay::*;
pub use fidelity::*;
pub use verify::*;
