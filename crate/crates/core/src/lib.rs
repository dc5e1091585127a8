//! Spectral-Galerkin solver for the 2D Navier-Stokes and Navier-Stokes-α
//! equations in the Stokes eigenbasis, with an experiment harness for
//! convergence rates in `α` and the truncation level `n`.

pub mod diagnostics;
pub mod eigenbasis;
pub mod error;
pub mod experiments;
pub mod field;
pub mod manifest;
pub mod nonlinear;
pub mod solver;
pub mod transform;

pub use eigenbasis::{DomainKind, EigenBasis, ValidationReport};
pub use error::{Error, Result};
pub use field::SpectralField;
pub use solver::{integrate, SolverConfig, SolverState, Stepper, Trajectory};
