//! Rotationally symmetric model solutions of `Δu + f(u) = 0` on the unit
//! 2-sphere, the τ̄-function and pseudo-radial comparison machinery built on
//! them, a finite-difference Dirichlet solver for spherical annuli, and the
//! level-set geometry needed to check gradient, curvature and length
//! estimates against numerical solutions.
//!
//! Every numerical routine is generic over [`Real`] (`f32` or `f64`). The
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! command line front end and the file formats use.

pub mod comparison;
pub mod error;
pub mod estimates;
pub mod io;
pub mod levelset;
pub mod nonlinearity;
pub mod ode;
pub mod pde;
pub mod profiles;
pub mod roots;
pub mod scalar;
pub mod tau;

pub use error::{Error, Result};
pub use nonlinearity::{ConditionReport, NonlinearityDesc};
pub use profiles::{Branch, SignReport};
pub use scalar::Real;
pub use tau::{CriticalBranch, CriticalHeight};

pub type Nonlinearity = nonlinearity::Nonlinearity<f64>;
pub type ModelProfile = profiles::ModelProfile<f64>;
pub type DiskProfile = profiles::DiskProfile<f64>;
pub type TauCurve = tau::TauCurve<f64>;
pub type ComparisonTriple = comparison::ComparisonTriple<f64>;
pub type GridSolution = pde::GridSolution<f64>;
pub type DomainSpec = pde::DomainSpec<f64>;
