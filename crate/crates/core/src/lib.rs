//! Numerical laboratory for singular radial solutions of strongly coupled
//! critical elliptic systems.
//!
//! The punctured-ball system is mapped to a half-cylinder by the
//! Emden-Fowler change of variables, where it becomes a planar Hamiltonian
//! ODE system. This crate constructs the periodic Fowler (Delaunay-type)
//! profiles of that system, classifies coupled trajectories onto rays,
//! computes Pohozaev invariants and their drift under radial potentials,
//! runs Floquet analysis of the linearized (Jacobi) operators, and fits
//! the asymptotic Fowler-type model of perturbed radial solutions.

pub mod classifier;
pub mod error;
pub mod fowler;
pub mod integrator;
pub mod jacobi;
pub mod model;
pub mod perturbed;
pub mod pohozaev;

pub use error::{Error, Result};
pub use fowler::FowlerProfile;
pub use integrator::{IntegratorConfig, Monodromy, Trajectory};
pub use model::{CylState, Dimension, Direction, RadialField};
pub use perturbed::{AsymptoticFit, PerturbedRun, PotentialSpec};
pub use pohozaev::PohozaevReport;
