//! Figure-eight three-body choreographies, the Fourier-Galerkin second variation
//! of the action around them, and the Morse indices that follow from its spectrum.

pub mod analysis;
pub mod continuation;
pub mod error;
pub mod fourier;
pub mod hessian;
pub mod io;
pub mod landscape;
pub mod potential;
pub mod run;
pub mod solver;
pub mod symmetry;
pub mod trajectory;

pub use error::{Error, Result};
pub use potential::{Configuration, PotentialSpec};
pub use trajectory::{ActionEvaluation, PeriodicTrajectory, SymmetryFlags};
