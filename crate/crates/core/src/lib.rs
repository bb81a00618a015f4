//! Simulation and verification toolkit for the one-dimensional isentropic
//! compressible Navier-Stokes equations with degenerate viscosity
//! `mu(rho) = rho^delta` and vacuum.
//!
//! The crate evolves isolated-mass-group initial data with an explicit
//! finite-volume scheme, follows particle paths through the flow, evaluates
//! the moment functionals of the fluid group and derives an upper bound on
//! the lifespan of regular solutions from the envelopes of `I(t)`.

pub mod error;
pub mod functionals;
pub mod lagrangian;
pub mod model;
pub mod scheme;
pub mod simulation;
pub mod verify;

pub use error::{Error, Result};
pub use functionals::{BlowUpReport, DiagnosticsRecord, GammaCase};
pub use lagrangian::{FlowInterval, ParticlePath, PathLabel};
pub use model::{FluidState, Grid, IsolatedMassGroupSpec, Parameters};
pub use scheme::{Boundary, SchemeConfig, StepReport};
pub use simulation::{DataKind, MassInjection, RunConfig, RunOutput};
pub use verify::{Check, Tolerances, VerificationReport};
