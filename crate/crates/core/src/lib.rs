//! Simulation of the quantum Zeno effect in a three-level atom.
//!
//! * [`linalg`]: 3×3 complex matrices and density-matrix checks.
//! * [`lindblad`]: optical Bloch equations with pulsed resonant drives.
//! * [`zeno`]: the pulsed-measurement protocol, the projection-postulate
//!   prediction, decoherence-time extraction and the spacing sweep.
//! * [`bath`]: spontaneous emission from a discretized vacuum in the
//!   single-excitation sector.

pub mod bath;
pub mod error;
pub mod lindblad;
pub mod linalg;
pub mod parallel;
pub mod zeno;

pub use error::{Error, Result};
pub use linalg::{Complex, DensityMatrix3, Matrix3};
