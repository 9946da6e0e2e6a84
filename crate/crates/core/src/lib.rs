//! Dynamics of a frequency-modulated qubit in a leaky cavity.
//!
//! The crate solves the non-Markovian amplitude equation for a qubit whose
//! transition frequency is sinusoidally modulated while it decays into a
//! Lorentzian reservoir, and derives from the amplitude the reduced state,
//! standard and optimized quantum witnesses, BLP non-Markovianity, the
//! quantum speed limit time and the 𝕽g ratio.

pub mod bessel;
pub mod error;
pub mod figures;
pub mod params;
pub mod solver;
pub mod speed;
pub mod state;
pub mod witness;

pub use error::{Error, Result};
pub use params::{ModelParams, Unit};
pub use solver::{AmplitudeTrajectory, SolverTag, Tolerances};
