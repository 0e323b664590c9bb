//! Permutation-driven Floquet spin chains that host n-tuple discrete time
//! crystals, together with the numerics used to study them.
//!
//! The crate is organised bottom-up:
//!
//! * [`basis`] enumerates computational basis states, swap networks and orbits.
//! * [`model`] samples disorder and assembles Floquet unitaries.
//! * [`spectral`] diagonalizes unitaries and extracts gap and level statistics.
//! * [`uptt`] implements unitary perturbation theory around solvable points.
//! * [`charges`] builds local charges, symmetry generators and commutator norms.
//! * [`dynamics`] propagates states and analyses subharmonic response.
//! * [`harness`] runs disorder-averaged sweeps and fits.

pub mod basis;
pub mod charges;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod spectral;
pub mod uptt;

pub use error::{Error, Result};
pub use faer::c64;
