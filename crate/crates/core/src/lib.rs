//! Classical molecular dynamics in a normal-mode basis, with large-scale
//! approximations that evolve only the center of mass and orientation.
//!
//! The pipeline is: load a [`Molecule`], find its equilibrium with
//! [`minimize_equilibrium`], build the [`ModeBasis`] from the mass-weighted
//! Hessian, draw equipartition initial data, and integrate one of the
//! [`Scheme`]s with the adaptive 8th-order integrator.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod integrator;
pub mod modes;
pub mod molecule;
pub mod potential;
pub mod rotation;
pub mod simulation;
pub mod units;

pub use nalgebra::{Matrix3, Vector3};

pub type Vec3 = Vector3<f64>;

pub use dynamics::{CartesianState, ModeBasisState, Scheme, SchemeKind};
pub use error::{Error, Result};
pub use integrator::{IntegratorConfig, Trajectory};
pub use modes::ModeBasis;
pub use molecule::{load_molecule, minimize_equilibrium, Molecule};
pub use potential::PotentialParams;
pub use rotation::Quaternion;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
