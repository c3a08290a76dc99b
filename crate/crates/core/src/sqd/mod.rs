//! Sample-based diagonalization with self-consistent configuration recovery.
//!
//! Works in `f64` throughout.

mod fcidump;
mod hamiltonian;
mod recovery;

pub use fcidump::*;
pub use hamiltonian::*;
pub use recovery::*;
