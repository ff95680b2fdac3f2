//! Contact-sequence and body-shape planning for planar multi-legged robots.
//!
//! The pipeline runs in four stages:
//!
//! 1. **Model** ([`model`]): robot morphology, contact-pattern enumeration,
//!    shape-space sampling, forward kinematics.
//! 2. **Dynamics** ([`dynamics`]): quasi-static force balance under
//!    regularized Coulomb friction, yielding the local connection `A(r)` that
//!    maps shape velocity to body velocity per contact pattern.
//! 3. **Fields and planning** ([`fields`], [`planner`]): connection rows
//!    evaluated over a shape-space grid, Helmholtz-Hodge decomposed into
//!    per-pattern potentials; step displacements become potential differences
//!    and optimal contact scheduling becomes an exactly solvable cyclic
//!    Potts/Ising ground-state problem.
//! 4. **Gait** ([`gait`]): planner output assembled into executable cyclic
//!    gaits, paired with anti-symmetric companions, and verified by
//!    quasi-static simulation of the reconstruction equation.
//!
//! The [`cli`] module wires these into the `gaitspin` command-line tool;
//! [`verify`] hosts the seeded randomized self-check suites.

pub mod cache;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod gait;
pub mod model;
pub mod planner;
pub mod verify;

#[cfg(doctest)]
pub mod book;

pub use error::{Error, Result};
